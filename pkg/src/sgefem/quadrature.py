"""Quadrature rules on the reference triangle and the unit interval.

Triangle rules are symmetric positive-weight rules in barycentric
coordinates with weights summing to 1, so integrals scale by the
physical area |K|.  Edge (1D) rules are Gauss-Legendre on [0, 1] with
weights summing to 1, scaling by the edge length.
"""

import numpy as np

from ._dunavant import ORBITS

# Requested degree -> stored rule.  Degrees 3 and 7 are served by the
# next rule up because the matching rules carry a negative weight;
# degree 11 because that rule has a point outside the triangle.
_DEGREE_TO_RULE = {1: 1, 2: 2, 3: 4, 4: 4, 5: 5, 6: 6, 7: 8, 8: 8,
                   9: 9, 10: 10, 11: 12, 12: 12}

MAX_DEGREE = 12


class QuadratureRule:
    """Immutable point/weight table.

    points : (npts, 3) barycentric coordinates
    weights : (npts,) weights summing to 1
    exact_degree : largest polynomial degree integrated exactly
    """

    def __init__(self, points, weights, exact_degree):
        self.points = np.ascontiguousarray(points, dtype=float)
        self.weights = np.ascontiguousarray(weights, dtype=float)
        self.exact_degree = int(exact_degree)
        self.points.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def npts(self):
        return self.weights.shape[0]


def _expand(orbits):
    pts, wts = [], []
    for size, a, b, c, w in orbits:
        if size == 1:
            group = [(a, b, c)]
        elif size == 3:
            group = [(a, b, c), (b, c, a), (c, a, b)]
        else:
            group = [(a, b, c), (b, c, a), (c, a, b),
                     (a, c, b), (c, b, a), (b, a, c)]
        pts.extend(group)
        wts.extend([w] * size)
    return np.array(pts), np.array(wts)


_CACHE = {}


def rule_for_degree(deg):
    """Return a triangle rule exact to at least ``deg`` (1 <= deg <= 12)."""
    if not 1 <= deg <= MAX_DEGREE:
        raise ValueError("no triangle rule for degree %r "
                         "(supported: 1..%d)" % (deg, MAX_DEGREE))
    rule = _DEGREE_TO_RULE[deg]
    if rule not in _CACHE:
        pts, wts = _expand(ORBITS[rule])
        _CACHE[rule] = QuadratureRule(pts, wts, rule)
    return _CACHE[rule]


def edge_rule(deg):
    """Gauss-Legendre rule on [0, 1] exact to degree ``deg``.

    Returns (t, w) with sum(w) = 1; the point set is symmetric about
    t = 1/2, so the value of a mean integral does not depend on the
    direction in which the edge is traversed.
    """
    npts = (deg + 2) // 2
    x, w = np.polynomial.legendre.leggauss(npts)
    return (x + 1.0) / 2.0, w / 2.0
