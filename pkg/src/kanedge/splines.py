"""Uniform B-spline bases built from one cardinal spline.

All bases share a single shape: with uniform knots extended ``K`` steps past
each domain end, every basis function is a translate of the cardinal B-spline
of degree ``K``. Evaluation therefore reduces to locating the knot interval of
``x`` and reading the K+1 active pieces of the cardinal spline at the local
fractional position. That translation invariance is what lets the quantized
path share one lookup table across the whole layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def cardinal_bspline(degree: int, u: float) -> float:
    """Cardinal B-spline of ``degree`` on integer knots [0, degree+1],
    evaluated with the Cox-de Boor recursion."""
    if degree == 0:
        return 1.0 if 0.0 <= u < 1.0 else 0.0
    left = u / degree * cardinal_bspline(degree - 1, u)
    right = (degree + 1 - u) / degree * cardinal_bspline(degree - 1, u - 1.0)
    return left + right


def cardinal_piece(degree: int, piece: int, t: float) -> float:
    """Value of the cardinal spline on piece ``piece`` at local position ``t``.

    Piece ``m`` is the restriction of the degree-``degree`` cardinal spline to
    the unit interval [m, m+1]; ``t`` in [0, 1] is the position inside it.
    """
    if not isinstance(degree, (int, np.integer)) or degree < 1:
        raise ValueError(f"degree must be a positive integer, got {degree}")
    if not isinstance(piece, (int, np.integer)) or not 0 <= piece <= degree:
        raise ValueError(f"piece index must lie in [0, {degree}], got {piece}")
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"local position must lie in [0, 1], got {t}")
    return cardinal_bspline(degree, piece + t)


def active_piece_values(degree: int, t) -> np.ndarray:
    """Values of the K+1 bases active at local position ``t``.

    Returns an array of shape ``t.shape + (degree+1,)`` whose entry ``m`` is
    the value of the basis starting ``m`` intervals left of ``t``'s interval,
    i.e. ``cardinal_bspline(degree, degree - m + t)``. Same Cox-de Boor
    recursion as :func:`cardinal_bspline`, run on all active offsets at once.
    """
    t = np.asarray(t, dtype=np.float64)
    act = np.zeros(t.shape + (degree + 1,))
    act[..., 0] = 1.0
    for d in range(1, degree + 1):
        prev = act[..., : d + 1].copy()
        for m in range(d, -1, -1):
            left = (d - m + t) / d * (prev[..., m - 1] if m >= 1 else 0.0)
            right = (m + 1 - t) / d * (prev[..., m] if m <= d - 1 else 0.0)
            act[..., m] = left + right
    return act


def active_piece_derivatives(degree: int, t) -> np.ndarray:
    """d/dt of :func:`active_piece_values`, from the degree-(K-1) difference
    identity C_K'(u) = C_{K-1}(u) - C_{K-1}(u - 1)."""
    t = np.asarray(t, dtype=np.float64)
    if degree == 1:
        lower = np.ones(t.shape + (1,))
    else:
        lower = active_piece_values(degree - 1, t)
    deriv = np.zeros(t.shape + (degree + 1,))
    for m in range(degree + 1):
        a = lower[..., m - 1] if 1 <= m <= degree else 0.0
        b = lower[..., m] if m <= degree - 1 else 0.0
        deriv[..., m] = a - b
    return deriv


@dataclass(frozen=True)
class SplineGrid:
    """Knot-grid geometry shared by the float and quantized paths.

    ``n_intervals`` knot intervals of equal width span [x_min, x_max]; knots
    extend ``degree`` steps beyond each end, giving ``n_intervals + degree``
    basis functions, all translates of one cardinal spline.
    """

    n_intervals: int
    degree: int
    x_min: float = -1.0
    x_max: float = 1.0

    def __post_init__(self):
        if self.n_intervals < 1:
            raise ValueError(f"n_intervals must be >= 1, got {self.n_intervals}")
        if self.degree < 1:
            raise ValueError(f"degree must be >= 1, got {self.degree}")
        if not self.x_max > self.x_min:
            raise ValueError(f"empty domain [{self.x_min}, {self.x_max}]")

    @property
    def step(self) -> float:
        return (self.x_max - self.x_min) / self.n_intervals

    @property
    def n_bases(self) -> int:
        return self.n_intervals + self.degree

    def locate(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Knot-interval index and local fractional position of ``x``.

        ``x == x_max`` lands in the last interval at t = 1; out-of-domain
        values are the caller's problem (clamp first).
        """
        x = np.asarray(x, dtype=np.float64)
        u = (x - self.x_min) / self.step
        j = np.clip(np.floor(u).astype(np.int64), 0, self.n_intervals - 1)
        return j, u - j

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return (x >= self.x_min) & (x <= self.x_max)


def basis_value(grid: SplineGrid, i: int, x: float) -> float:
    """Single basis function B_i at scalar ``x`` (the slow, obvious oracle)."""
    if not 0 <= i < grid.n_bases:
        raise ValueError(f"basis index {i} out of range [0, {grid.n_bases})")
    if not np.isfinite(x) or not grid.contains(x):
        raise ValueError(f"x={x} outside domain [{grid.x_min}, {grid.x_max}]")
    j, t = grid.locate(float(x))
    j = int(j)
    m = i - j
    if not 0 <= m <= grid.degree:
        return 0.0
    return cardinal_piece(grid.degree, grid.degree - m, float(t))


def basis_matrix(grid: SplineGrid, x) -> np.ndarray:
    """All basis values at once: shape ``x.shape + (n_bases,)``.

    Columns j..j+K hold the active piece values for each x; the rest are 0.
    """
    x = np.asarray(x, dtype=np.float64)
    j, t = grid.locate(x)
    act = active_piece_values(grid.degree, t)  # act[m] = piece K-m = B_{j+m}
    out = np.zeros(x.shape + (grid.n_bases,))
    cols = j[..., None] + np.arange(grid.degree + 1)
    np.put_along_axis(out, cols, act, axis=-1)
    return out


def basis_matrix_derivative(grid: SplineGrid, x) -> np.ndarray:
    """d/dx of :func:`basis_matrix` (chain rule brings in 1/step)."""
    x = np.asarray(x, dtype=np.float64)
    j, t = grid.locate(x)
    der = active_piece_derivatives(grid.degree, t) / grid.step
    out = np.zeros(x.shape + (grid.n_bases,))
    cols = j[..., None] + np.arange(grid.degree + 1)
    np.put_along_axis(out, cols, der, axis=-1)
    return out
