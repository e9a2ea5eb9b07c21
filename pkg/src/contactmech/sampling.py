"""Seeded sample boxes shared by the pointwise checks."""

from __future__ import annotations

from typing import Sequence

import numpy as np

DEFAULT_BOX = (-2.0, 2.0)
DEFAULT_SEED = 0


def sample_box(dim: int, n_points: int, box: Sequence[float] = DEFAULT_BOX, seed: int = DEFAULT_SEED,
               include_center: bool = False) -> np.ndarray:
    """``n_points`` uniform draws from ``[lo, hi]^dim``.

    ``box`` is either ``(lo, hi)`` for all coordinates or one ``(lo, hi)`` pair
    per coordinate.  With ``include_center`` the first row is the box center,
    which catches degeneracies sitting exactly at the origin.
    """
    box = np.asarray(box, dtype=float)
    if box.shape == (2,):
        lo, hi = np.full(dim, box[0]), np.full(dim, box[1])
    elif box.shape == (dim, 2):
        lo, hi = box[:, 0], box[:, 1]
    else:
        raise ValueError(f"box must be (lo, hi) or {dim} pairs, got shape {box.shape}")
    if np.any(hi < lo):
        raise ValueError("box has hi < lo")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(lo, hi, size=(n_points, dim))
    if include_center and n_points:
        pts[0] = 0.5 * (lo + hi)
    return pts
