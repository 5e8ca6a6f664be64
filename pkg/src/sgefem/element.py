"""The local displacement element and its nodal basis.

The shape space on a triangle K is

    V(K) = P2(K; R^2) + b_K P1(K; R^2) + b_K^2 P0(K; R^2),

a 20-dimensional space (b_K is the cubic bubble, the product of the
barycentric coordinates).  Both components share the same 10-dimensional
scalar space, for which every modal function is a single barycentric
monomial:

    l1^2, l2^2, l3^2, l1 l2, l1 l3, l2 l3   (spans P2)
    b_K, b_K l1, b_K l2                     (spans b_K P1)
    b_K^2

The scalar degrees of freedom are the values at the 3 vertices, the
values at the 3 edge midpoints, the mean normal derivative over each
edge (against the global edge normal, normalized by the edge length)
and the mean over the triangle.  A vector DoF is a scalar DoF applied
to one component; vector index = 2 * scalar index + component.

Because point values and means of barycentric monomials do not depend
on the triangle, only the three normal-derivative rows of the DoF
matrix vary with geometry, which keeps the batched construction cheap.
"""

import numpy as np

from .quadrature import rule_for_degree, edge_rule

#: exponent triples (a, b, c) of the scalar modal monomials l1^a l2^b l3^c
MODAL_EXPONENTS = ((2, 0, 0), (0, 2, 0), (0, 0, 2),
                   (1, 1, 0), (1, 0, 1), (0, 1, 1),
                   (1, 1, 1), (2, 1, 1), (1, 2, 1),
                   (2, 2, 2))

NUM_SCALAR_DOFS = 10
NUM_DOFS = 20

#: quadrature degrees for the DoF functionals
_EDGE_DOF_DEGREE = 5      # normal derivative of degree-6 functions on an edge
_MEAN_DOF_DEGREE = 6      # element mean of degree-6 functions

_COND_LIMIT = 1e10


class SingularElementError(ValueError):
    """DoF matrix numerically singular (degenerate triangle)."""


def dof_descriptors():
    """The 20 vector DoFs in local order: (kind, local entity, component).

    Kinds: ``vertex_value``, ``edge_midpoint_value``,
    ``edge_mean_normal_derivative``, ``element_mean``.  Local edge s is
    opposite local vertex s.  Component is 0 or 1.
    """
    kinds = (["vertex_value"] * 3 + ["edge_midpoint_value"] * 3
             + ["edge_mean_normal_derivative"] * 3 + ["element_mean"])
    entities = [0, 1, 2, 0, 1, 2, 0, 1, 2, 0]
    out = []
    for kind, ent in zip(kinds, entities):
        for comp in (0, 1):
            out.append((kind, ent, comp))
    return out


def modal_tables(bary, order):
    """Values and barycentric derivatives of the 10 scalar monomials.

    Parameters
    ----------
    bary : (npts, 3) array of barycentric coordinates
    order : 0, 1 or 2

    Returns
    -------
    val : (npts, 10)
    dbary : (npts, 10, 3), first partials w.r.t. each coordinate
        (only for order >= 1)
    d2bary : (npts, 10, 3, 3), second partials (only for order == 2)
    """
    L = np.asarray(bary, dtype=float)
    q = L.shape[0]
    # powers of each coordinate, exponent 0..2
    P = np.ones((q, 3, 3))
    P[:, :, 1] = L
    P[:, :, 2] = L * L

    val = np.empty((q, 10))
    dbary = np.empty((q, 10, 3)) if order >= 1 else None
    d2bary = np.empty((q, 10, 3, 3)) if order >= 2 else None

    for j, exp in enumerate(MODAL_EXPONENTS):
        facs = [P[:, s, exp[s]] for s in range(3)]
        val[:, j] = facs[0] * facs[1] * facs[2]
        if order >= 1:
            for s in range(3):
                a = exp[s]
                if a == 0:
                    dbary[:, j, s] = 0.0
                else:
                    others = [P[:, u, exp[u]] for u in range(3) if u != s]
                    dbary[:, j, s] = a * P[:, s, a - 1] * others[0] * others[1]
        if order >= 2:
            for s in range(3):
                for u in range(s, 3):
                    a, b = exp[s], exp[u]
                    if s == u:
                        if a < 2:
                            term = np.zeros(q)
                        else:
                            others = [P[:, w, exp[w]] for w in range(3)
                                      if w != s]
                            term = a * (a - 1) * others[0] * others[1]
                    else:
                        if a == 0 or b == 0:
                            term = np.zeros(q)
                        else:
                            w = 3 - s - u
                            term = (a * b * P[:, s, a - 1] * P[:, u, b - 1]
                                    * P[:, w, exp[w]])
                    d2bary[:, j, s, u] = term
                    d2bary[:, j, u, s] = term

    if order == 0:
        return val
    if order == 1:
        return val, dbary
    return val, dbary, d2bary


# universal ingredients of the DoF matrix ---------------------------------

def _universal_rows():
    """Rows 0-5 (point values) and 9 (element mean) of the scalar DoF
    matrix, identical for every triangle."""
    pts = np.array([
        [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0],   # vertices
        [0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0],   # midpoints
    ])
    rows = np.zeros((10, 10))
    rows[:6] = modal_tables(pts, 0)
    rule = rule_for_degree(_MEAN_DOF_DEGREE)
    rows[9] = rule.weights @ modal_tables(rule.points, 0)
    return rows


_UNIVERSAL_ROWS = _universal_rows()

# barycentric points and modal gradients on the three edges, for the
# normal-derivative rows; edge s runs from local vertex (s+1) to (s+2)
_EDGE_T, _EDGE_W = edge_rule(_EDGE_DOF_DEGREE)


def _edge_point_tables():
    pts = []
    for s in range(3):
        lam = np.zeros((len(_EDGE_T), 3))
        lam[:, (s + 1) % 3] = 1.0 - _EDGE_T
        lam[:, (s + 2) % 3] = _EDGE_T
        pts.append(lam)
    bary = np.vstack(pts)                        # (3*g, 3)
    _, dbary = modal_tables(bary, 1)
    return dbary.reshape(3, len(_EDGE_T), 10, 3)  # (edge, gauss, modal, coord)


_EDGE_DBARY = _edge_point_tables()


def batched_scalar_dof_matrices(mesh, tris=None):
    """Scalar DoF matrices (len(tris), 10, 10) for the given triangles.

    Only the three normal-derivative rows depend on the triangle: entry
    (6+s, j) is sum_u dbary[j, u] (grad(l_u) . n_s) averaged over the
    Gauss points of edge s, with n_s the global normal of that edge.
    """
    if tris is None:
        tris = np.arange(mesh.num_triangles)
    tris = np.asarray(tris)
    G = mesh.bary_grads[tris]                          # (T, 3, 2)
    normals = mesh.edge_normal[mesh.edge_of_triangle[tris]]  # (T, 3, 2)

    M = np.broadcast_to(_UNIVERSAL_ROWS, (len(tris), 10, 10)).copy()
    # gn[t, e, u] = grad(l_u) . n_e
    gn = np.einsum("tux,tex->teu", G, normals)
    # mean over gauss points of sum_u dbary[e, g, j, u] * gn[t, e, u]
    M[:, 6:9, :] = np.einsum("egju,teu,g->tej", _EDGE_DBARY, gn, _EDGE_W)
    return M


def scalar_dof_matrix(frame):
    """10x10 scalar DoF matrix of one triangle (see module docstring)."""
    M = _UNIVERSAL_ROWS.copy()
    gn = frame.bary_grads @ frame.edge_normal.T       # (u, e)
    M[6:9, :] = np.einsum("egju,ue,g->ej", _EDGE_DBARY, gn, _EDGE_W)
    return M


def _check_conditioning(M0, h):
    scaled = M0.copy()
    scaled[6:9] *= h
    sv = np.linalg.svd(scaled, compute_uv=False)
    if sv[-1] == 0.0 or sv[0] / sv[-1] > _COND_LIMIT:
        raise SingularElementError(
            "DoF matrix nearly singular (condition number %.3e)"
            % (np.inf if sv[-1] == 0.0 else sv[0] / sv[-1]))


def dof_matrix(frame):
    """20x20 vector DoF matrix M_ij = DoF_i(modal_j) of one triangle.

    Vector DoFs and modal functions are ordered with the component
    fastest, so M is the scalar matrix with each entry replaced by a
    2x2 scalar block: M = kron(M_scalar, I2).  Raises
    :class:`SingularElementError` when the length-scaled matrix has
    condition number above 1e10.
    """
    M0 = scalar_dof_matrix(frame)
    _check_conditioning(M0, frame.h)
    return np.kron(M0, np.eye(2))


class LocalBasis:
    """Nodal basis of V(K): shape function j has the j-th DoF equal to 1
    and the rest 0.  ``coeff[:, j]`` expands shape function j in the
    modal basis; ``scalar_coeff`` is the 10x10 scalar version."""

    def __init__(self, frame, scalar_coeff):
        self.frame = frame
        self.scalar_coeff = scalar_coeff

    @property
    def coeff(self):
        return np.kron(self.scalar_coeff, np.eye(2))

    def bary_of(self, x):
        """Barycentric coordinates of physical points (..., 2)."""
        x = np.asarray(x, dtype=float)
        centroid = self.frame.verts.mean(axis=0)
        return 1.0 / 3.0 + (x - centroid) @ self.frame.bary_grads.T

    def eval_scalar(self, bary, order):
        """Scalar nodal values (and derivatives) at barycentric points.

        Returns val (npts, 10) for order 0, adds grad (npts, 10, 2) for
        order 1 and hess (npts, 10, 2, 2) for order 2.  Derivatives are
        w.r.t. physical coordinates.
        """
        G = self.frame.bary_grads
        C = self.scalar_coeff
        out = modal_tables(bary, order)
        if order == 0:
            return out @ C
        if order == 1:
            val, dbary = out
            grad = np.einsum("qjs,sx->qjx", dbary, G)
            return val @ C, np.einsum("qjx,ji->qix", grad, C)
        val, dbary, d2bary = out
        grad = np.einsum("qjs,sx->qjx", dbary, G)
        hess = np.einsum("qjsu,sx,uy->qjxy", d2bary, G, G)
        return (val @ C,
                np.einsum("qjx,ji->qix", grad, C),
                np.einsum("qjxy,ji->qixy", hess, C))


def nodal_basis(frame):
    """Invert the DoF matrix to obtain the nodal basis of V(K)."""
    M0 = scalar_dof_matrix(frame)
    _check_conditioning(M0, frame.h)
    return LocalBasis(frame, np.linalg.inv(M0))


def batched_scalar_coeff(mesh, tris=None):
    """Nodal coefficients (len(tris), 10, 10) for a batch of triangles;
    the conditioning check is skipped (meshes are validated separately)."""
    return np.linalg.inv(batched_scalar_dof_matrices(mesh, tris))


def eval_basis(basis, x, order):
    """Evaluate all 20 vector shape functions at physical points.

    Parameters
    ----------
    basis : LocalBasis
    x : (2,) or (npts, 2) physical coordinates inside the triangle
    order : 0, 1 or 2

    Returns
    -------
    order 0: values (..., 20, 2)
    order 1: (values, gradients (..., 20, 2, 2)) with grad[i, a, b]
        = d(phi_i)_a / dx_b
    order 2: adds hessians (..., 20, 2, 2, 2), hess[i, a, b, c]
        = d^2 (phi_i)_a / dx_b dx_c
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    bary = basis.bary_of(x.reshape(-1, 2))
    npts = bary.shape[0]

    def vectorize(scalar_table, extra_shape):
        # scalar shape i, component c -> vector dof 2 i + c
        out = np.zeros((npts, 20, 2) + extra_shape)
        for c in (0, 1):
            out[:, c::2, c] = scalar_table
        return out[0] if single else out

    tables = basis.eval_scalar(bary, order)
    if order == 0:
        return vectorize(tables, ())
    if order == 1:
        val, grad = tables
        return vectorize(val, ()), vectorize(grad, (2,))
    val, grad, hess = tables
    return (vectorize(val, ()), vectorize(grad, (2,)),
            vectorize(hess, (2, 2)))


def local_interpolant(frame, value_fn, grad_fn):
    """Apply the 20 DoF functionals to a smooth vector field.

    ``value_fn(x)`` maps (npts, 2) points to (npts, 2) values;
    ``grad_fn(x)`` to (npts, 2, 2) gradients with grad[i, a, b]
    = d u_a / dx_b.  Returns the 20 DoF values in local order.
    """
    dofs = np.empty(20)
    verts = frame.verts
    mids = frame.edge_midpoint
    dofs[0:6:2], dofs[1:6:2] = value_fn(verts).T
    dofs[6:12:2], dofs[7:12:2] = value_fn(mids).T

    t, w = _EDGE_T, _EDGE_W
    for s in range(3):
        a, b = verts[(s + 1) % 3], verts[(s + 2) % 3]
        pts = np.outer(1.0 - t, a) + np.outer(t, b)
        dn = grad_fn(pts) @ frame.edge_normal[s]      # (g, 2)
        dofs[12 + 2 * s:14 + 2 * s] = w @ dn

    rule = rule_for_degree(_MEAN_DOF_DEGREE)
    pts = rule.points @ verts
    dofs[18:20] = rule.weights @ value_fn(pts)
    return dofs
