"""Quadrature rules on the reference triangle and on edges."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    """Barycentric points and weights on the reference triangle.

    Weights sum to one; multiply by the element area when integrating.
    """

    points: np.ndarray  # (nq, 3) barycentric coordinates
    weights: np.ndarray  # (nq,)
    degree: int

    def __post_init__(self):
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")
        if abs(self.weights.sum() - 1.0) > 1e-14:
            raise ValueError("quadrature weights must sum to one")
        if not np.allclose(self.points.sum(axis=1), 1.0, atol=1e-15):
            raise ValueError("barycentric points must sum to one")

    @property
    def npoints(self):
        return len(self.weights)


@lru_cache(maxsize=None)
def triangle_rule(degree=4):
    """Symmetric Gauss rule on the triangle.

    Only the rules used by the package are tabulated: the 1-point centroid
    rule (degree 1), the 3-point interior rule (degree 2) and the 6-point
    Strang-Fix / Dunavant rule (degree 4).
    """
    if degree <= 1:
        pts = np.array([[1 / 3, 1 / 3, 1 / 3]])
        wts = np.array([1.0])
        deg = 1
    elif degree == 2:
        a, b = 2 / 3, 1 / 6
        pts = np.array([[a, b, b], [b, a, b], [b, b, a]])
        wts = np.full(3, 1 / 3)
        deg = 2
    elif degree <= 4:
        a1, b1 = 0.108103018168070, 0.445948490915965
        a2, b2 = 0.816847572980459, 0.091576213509771
        w1, w2 = 0.223381589678011, 0.109951743655322
        pts = np.array(
            [
                [a1, b1, b1], [b1, a1, b1], [b1, b1, a1],
                [a2, b2, b2], [b2, a2, b2], [b2, b2, a2],
            ]
        )
        # re-close the barycentric sums lost to the 15-digit table
        pts[:, 0] = 1.0 - pts[:, 1] - pts[:, 2]
        wts = np.array([w1, w1, w1, w2, w2, w2])
        wts = wts / wts.sum()
        deg = 4
    else:
        raise ValueError(f"no triangle rule of degree {degree} tabulated")
    return QuadratureRule(pts, wts, deg)


@lru_cache(maxsize=None)
def gauss_legendre(npoints):
    """Gauss-Legendre nodes and weights mapped to [0, 1]; weights sum to one."""
    x, w = np.polynomial.legendre.leggauss(npoints)
    return 0.5 * (x + 1.0), 0.5 * w
