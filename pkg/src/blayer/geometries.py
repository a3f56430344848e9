"""Built-in validation geometries for the offset benchmark CLI."""

from __future__ import annotations

import numpy as np

from .nurbs import KnotVector, NurbsPatch


def validation_curve() -> NurbsPatch:
    """Rational quadratic planar curve used for offset error validation."""
    kv = KnotVector((0, 0, 0, 0.5, 1, 1, 1), 2)
    pts = np.array([[0, 0], [0.2, 1], [1, 1.3], [1.8, 0.8]], float)
    wts = np.array([1, 1 / np.sqrt(2), 1, 1 / np.sqrt(2)])
    return NurbsPatch((kv,), pts, wts)


def validation_surface() -> NurbsPatch:
    """Bicubic surface with a saddle region for offset error validation."""
    kv = KnotVector((0, 0, 0, 0, 1 / 3, 2 / 3, 1, 1, 1, 1), 3)
    pts = np.array([
        [(-25, -25, -10), (-15, -25, -8), (-5, -25, -5),
         (5, -25, -3), (15, -25, -8), (25, -25, -10)],
        [(-25, -15, -5), (-15, -15, -4), (-5, -15, -3),
         (5, -15, -2), (15, -15, -4), (25, -15, -5)],
        [(-25, -5, 0), (-15, -5, -4), (-5, -5, -8),
         (5, -5, -8), (15, -5, -4), (25, -5, 2)],
        [(-25, 5, 0), (-15, 5, -4), (-5, 5, -8),
         (5, 5, -8), (15, 5, -4), (25, 5, 2)],
        [(-25, 15, -5), (-15, 15, -4), (-5, 15, -3),
         (5, 15, -2), (15, 15, -4), (25, 15, -5)],
        [(-25, 25, -10), (-15, 25, -8), (-5, 25, -5),
         (5, 25, -3), (15, 25, -8), (25, 25, -10)],
    ], float)
    return NurbsPatch((kv, kv), pts, np.ones((6, 6)))
