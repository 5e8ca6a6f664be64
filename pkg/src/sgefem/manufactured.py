"""Closed-form test fields, their derivatives, and discrete error norms.

Body forces for the gradient model need fourth derivatives of the
exact displacement.  Rather than transcribing hand-derived formulas,
each field is evaluated in a small jet arithmetic: a truncated Taylor
expansion of total degree 4 is propagated through the closed-form
expression, and any mixed partial up to order 4 is read off the
coefficients exactly.  A trailing batch axis lets one call produce
jets at every quadrature point of a mesh chunk at once.
"""

import math

import numpy as np

from .assembly import DEGREE_LOAD

_DEG = 4
_PAIRS = tuple((i, j) for i in range(_DEG + 1) for j in range(_DEG + 1)
               if i + j <= _DEG)


class Jet2:
    """Bivariate Taylor polynomial of total degree <= 4.

    ``c[i, j]`` is the coefficient of (x-x0)^i (y-y0)^j; axes beyond
    the first two carry a batch of expansion points.  Entries with
    i + j > 4 are kept at zero, so products truncate by construction.
    """

    __slots__ = ("c", "point")

    def __init__(self, c, point):
        self.c = c
        self.point = point

    @classmethod
    def variables(cls, x):
        """Coordinate jets (x1, x2) expanded at points x of shape (..., 2)."""
        x = np.asarray(x, dtype=float)
        batch = x.shape[:-1]
        jets = []
        for axis in (0, 1):
            c = np.zeros((_DEG + 1, _DEG + 1) + batch)
            c[0, 0] = x[..., axis]
            c[1 - axis, axis] = 1.0
            jets.append(cls(c, x))
        return tuple(jets)

    @property
    def value(self):
        return self.c[0, 0]

    def partial(self, i, j):
        """The mixed partial d^{i+j} f / dx^i dy^j at the expansion point."""
        return self.c[i, j] * float(math.factorial(i) * math.factorial(j))

    def __add__(self, other):
        if isinstance(other, Jet2):
            return Jet2(self.c + other.c, self.point)
        c = self.c.copy()
        c[0, 0] = c[0, 0] + other
        return Jet2(c, self.point)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.c, self.point)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet2):
            return Jet2(self.c * other, self.point)
        a, b = self.c, other.c
        out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
        for i, j in _PAIRS:
            for k in range(i + 1):
                for l in range(j + 1):
                    out[i, j] += a[k, l] * b[i - k, j - l]
        return Jet2(out, self.point)

    __rmul__ = __mul__

    def __pow__(self, n):
        if not (isinstance(n, int) and n >= 1):
            raise ValueError("only positive integer powers")
        out = self
        for _ in range(n - 1):
            out = out * self
        return out

    def _series(self, f0, f1, f2, f3, f4):
        """sum_k f_k t^k / k! where t = self - self.value (nilpotent)."""
        t = Jet2(self.c.copy(), self.point)
        t.c[0, 0] = 0.0
        t2 = t * t
        t3 = t2 * t
        t4 = t2 * t2
        c = (f1 * t.c + (f2 / 2.0) * t2.c + (f3 / 6.0) * t3.c
             + (f4 / 24.0) * t4.c)
        c[0, 0] = c[0, 0] + f0
        return Jet2(c, self.point)

    def exp(self):
        e = np.exp(self.value)
        return self._series(e, e, e, e, e)

    def sin(self):
        s, c = np.sin(self.value), np.cos(self.value)
        return self._series(s, c, -s, -c, s)

    def cos(self):
        s, c = np.sin(self.value), np.cos(self.value)
        return self._series(c, -s, -c, s, c)


class AnalyticField:
    """A named exact displacement field on the unit square."""

    def __init__(self, name, builder, divergence_free):
        self.name = name
        self.divergence_free = divergence_free
        self._builder = builder

    def jets(self, x):
        """Degree-4 jets (u1, u2) at points x of shape (..., 2)."""
        x1, x2 = Jet2.variables(x)
        return self._builder(x1, x2)

    def value(self, x):
        j1, j2 = self.jets(x)
        return np.stack([j1.value, j2.value], axis=-1)

    def gradient(self, x):
        """du_a/dx_b at x, shape (..., 2, 2)."""
        jets = self.jets(x)
        g = np.empty(np.asarray(x).shape[:-1] + (2, 2))
        for a, j in enumerate(jets):
            g[..., a, 0] = j.partial(1, 0)
            g[..., a, 1] = j.partial(0, 1)
        return g


def _example1(x1, x2):
    # smooth, divergence-free, clamped: u and its normal derivative
    # vanish on the whole boundary
    g = (2.0 * math.pi * x1).cos().exp()
    s2y = (2.0 * math.pi * x2).sin()
    sy = (math.pi * x2).sin()
    u1 = 3.0 * (g - math.e) ** 2 * s2y * sy
    u2 = 8.0 * (g * g - math.e * g) * (2.0 * math.pi * x1).sin() * sy ** 3
    return u1, u2


def _example2(x1, x2):
    # divergence-free, zero on the boundary, but with a nonzero normal
    # derivative there: the driver of the boundary layer in the limit
    # of vanishing gradient parameter
    u1 = -1.0 * x1 ** 2 * (1.0 - x1) ** 2 * x2 * (1.0 - x2) * (1.0 - 2.0 * x2)
    u2 = x1 * (1.0 - x1) * (1.0 - 2.0 * x1) * x2 ** 2 * (1.0 - x2) ** 2
    return u1, u2


FIELDS = {
    "example1": AnalyticField("example1", _example1, divergence_free=True),
    "example2": AnalyticField("example2", _example2, divergence_free=True),
}


def field_by_name(name):
    try:
        return FIELDS[name]
    except KeyError:
        raise ValueError("unknown field %r (choose from %s)"
                         % (name, ", ".join(sorted(FIELDS))))


def jet_eval(field, x):
    """Degree-4 jets of both components of ``field`` at x."""
    return field.jets(x)


def _divergence_parts(j1, j2):
    """grad(div u) and grad(laplace(div u)) from component jets."""
    gdiv = (j1.partial(2, 0) + j2.partial(1, 1),
            j1.partial(1, 1) + j2.partial(0, 2))
    glapdiv = (j1.partial(4, 0) + j2.partial(3, 1)
               + j1.partial(2, 2) + j2.partial(1, 3),
               j1.partial(3, 1) + j2.partial(2, 2)
               + j1.partial(1, 3) + j2.partial(0, 4))
    return gdiv, glapdiv


def body_force_sge(field, params):
    """f = -div sigma(u) + iota^2 div(laplace(sigma(u))) as a callable.

    With sigma(u) = 2 mu eps(u) + lambda (div u) I this expands to
    -mu lap(u) - (mu+lambda) grad(div u) plus iota^2 times the
    bilaplacian counterpart; for divergence-free fields the grad(div)
    terms are dropped identically, so lambda never enters.
    """
    mu, lam, i2 = params.mu, params.lam, params.iota ** 2

    def f(x):
        j1, j2 = field.jets(x)
        out = np.empty(np.asarray(x).shape[:-1] + (2,))
        for a, j in enumerate((j1, j2)):
            lap = j.partial(2, 0) + j.partial(0, 2)
            bilap = (j.partial(4, 0) + 2.0 * j.partial(2, 2)
                     + j.partial(0, 4))
            out[..., a] = -mu * lap + i2 * mu * bilap
        if not field.divergence_free:
            gdiv, glapdiv = _divergence_parts(j1, j2)
            for a in (0, 1):
                out[..., a] += (mu + lam) * (-gdiv[a] + i2 * glapdiv[a])
        return out

    return f


def body_force_elasticity(field, params):
    """f = -mu lap(u) - (mu+lambda) grad(div u); the classical limit load.

    For a divergence-free field this is -mu lap(u), independent of both
    lambda and iota.
    """
    mu, lam = params.mu, params.lam

    def f(x):
        j1, j2 = field.jets(x)
        out = np.empty(np.asarray(x).shape[:-1] + (2,))
        out[..., 0] = -mu * (j1.partial(2, 0) + j1.partial(0, 2))
        out[..., 1] = -mu * (j2.partial(2, 0) + j2.partial(0, 2))
        if not field.divergence_free:
            gdiv, _ = _divergence_parts(j1, j2)
            for a in (0, 1):
                out[..., a] -= (mu + lam) * gdiv[a]
        return out

    return f


def error_norms(mesh, cache, vmap, u_h, field, iota, f=None,
                p_h=None, qmap=None, lam=1.0, degree=DEGREE_LOAD):
    """Discrete errors of a solve against an exact field.

    Returns (|e|_1, |e|_{2,h}, ||e||_{V,h}, ||e_p||_Q, ||f||_0) where
    e = u_h - u, ||e||_{V,h}^2 = |e|_1^2 + iota^2 |e|_{2,h}^2, the
    pressure error is measured against p = lambda div u in the norm
    (||.||_0^2 + iota^2 |.|_1^2)^{1/2}, and ||f||_0 (zero when no load
    callable is given) is the normalization used by the relative error.
    Pressure terms are zero unless both ``p_h`` and ``qmap`` are given.
    The broken seminorm |e|_{2,h} sums one squared term per
    second-derivative multi-index (the mixed derivative counts once).
    """
    uext = np.concatenate([np.asarray(u_h, dtype=float), [0.0]])
    s1 = s2 = sp0 = sp1 = sf = 0.0
    for tris in cache.chunks():
        rule, (_, grad, hess) = cache.scalar_tables(tris, degree, 2)
        w = rule.weights[None, :] * mesh.area[tris][:, None]
        pts = np.einsum("qs,tsx->tqx", rule.points, mesh.tri_coords[tris])
        shape = pts.shape[:2]
        j1, j2 = field.jets(pts.reshape(-1, 2))

        ge = np.empty(shape + (2, 2))
        he = np.empty(shape + (2, 2, 2))
        for a, j in enumerate((j1, j2)):
            ge[..., a, 0] = j.partial(1, 0).reshape(shape)
            ge[..., a, 1] = j.partial(0, 1).reshape(shape)
            he[..., a, 0, 0] = j.partial(2, 0).reshape(shape)
            he[..., a, 0, 1] = j.partial(1, 1).reshape(shape)
            he[..., a, 1, 0] = he[..., a, 0, 1]
            he[..., a, 1, 1] = j.partial(0, 2).reshape(shape)

        locr = uext[vmap.cell_dofs[tris]].reshape(len(tris), 10, 2)
        e1 = np.einsum("tqjb,tja->tqab", grad, locr) - ge
        e2 = np.einsum("tqjbc,tja->tqabc", hess, locr, optimize=True) - he
        s1 += float(np.einsum("tq,tqab->", w, e1 ** 2))
        s2 += float(np.einsum("tq,tqabc->", w, e2 ** 2)
                    - np.einsum("tq,tqa->", w, e2[..., 0, 1] ** 2))

        if p_h is not None and qmap is not None:
            pext = np.concatenate([np.asarray(p_h, dtype=float), [0.0]])
            pl = pext[qmap.cell_dofs[tris]]
            ep = np.einsum("qs,ts->tq", rule.points, pl)
            gep = np.einsum("ts,tsx->tx", pl, mesh.bary_grads[tris])
            gep = np.broadcast_to(gep[:, None, :], shape + (2,)).copy()
            if not field.divergence_free:
                ep = ep - lam * (j1.partial(1, 0)
                                 + j2.partial(0, 1)).reshape(shape)
                gep[..., 0] -= lam * (j1.partial(2, 0)
                                      + j2.partial(1, 1)).reshape(shape)
                gep[..., 1] -= lam * (j1.partial(1, 1)
                                      + j2.partial(0, 2)).reshape(shape)
            sp0 += float(np.einsum("tq,tq->", w, ep ** 2))
            sp1 += float(np.einsum("tq,tqx->", w, gep ** 2))

        if f is not None:
            fv = f(pts.reshape(-1, 2)).reshape(shape + (2,))
            sf += float(np.einsum("tq,tqa->", w, fv ** 2))

    i2 = iota ** 2
    return (math.sqrt(s1), math.sqrt(s2), math.sqrt(s1 + i2 * s2),
            math.sqrt(sp0 + i2 * sp1), math.sqrt(sf))
