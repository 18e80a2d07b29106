"""Independent ground truth for the solver and the prox toolbox.

Nothing here calls into :mod:`gfbp.operators` or :mod:`gfbp.solver`; the
checks are brute force on purpose so that agreement means something.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError, UnsupportedInstanceError

__all__ = ["GridSpec", "grid_prox", "finite_diff_grad", "reference_solve",
           "sqrt_decay", "box_projection", "nullspace_projection"]


@dataclass(frozen=True)
class GridSpec:
    lower: float
    upper: float
    num: int = 2001

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ParameterError(f"grid needs lower < upper, got [{self.lower}, {self.upper}]")
        if self.num < 2:
            raise ParameterError("grid needs at least two points")

    @property
    def spacing(self):
        return (self.upper - self.lower) / (self.num - 1)

    @classmethod
    def around(cls, x, half_width, num=2001):
        """Grid centered on ``x`` (per-axis bounds are shared, so use on one axis at a time)."""
        return cls(float(x) - half_width, float(x) + half_width, num)


def grid_prox(f, r, x, grid):
    """Brute-force ``argmin_u f(u) + ||u - x||^2 / (2r)`` on a 1-D or 2-D grid.

    ``f`` takes an array of points of shape ``(N, d)`` and returns ``N``
    values.  The grid argmin (lowest index on ties) is refined locally: a
    ternary search over the neighbouring cells in 1-D, successively finer
    local grids in 2-D.  In 2-D ``grid`` applies to both axes and should
    have at least 201 points.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = x.shape[0]
    if d not in (1, 2):
        raise ShapeError(f"grid_prox handles 1-D and 2-D points, got dimension {d}")
    if not r > 0:
        raise ParameterError(f"step must be positive, got {r}")

    def phi(U):
        diff = U - x
        return np.asarray(f(U), dtype=float) + np.sum(diff * diff, axis=1) / (2.0 * r)

    axis = np.linspace(grid.lower, grid.upper, grid.num)
    h = grid.spacing
    if d == 1:
        i = int(np.argmin(phi(axis[:, None])))
        lo, hi = axis[max(i - 1, 0)], axis[min(i + 1, grid.num - 1)]
        # convex in the bracket, so ternary search converges to its minimizer
        for _ in range(80):
            a = lo + (hi - lo) / 3.0
            b = hi - (hi - lo) / 3.0
            fa, fb = phi(np.array([[a], [b]]))
            if fa <= fb:
                hi = b
            else:
                lo = a
        return np.array([0.5 * (lo + hi)])

    U1, U2 = np.meshgrid(axis, axis, indexing="ij")
    pts = np.column_stack([U1.ravel(), U2.ravel()])
    best = pts[int(np.argmin(phi(pts)))]
    # zoom: successive local grids around the incumbent
    width = 2.0 * h
    for _ in range(10):
        local = np.linspace(-width, width, 21)
        L1, L2 = np.meshgrid(best[0] + local, best[1] + local, indexing="ij")
        cand = np.column_stack([L1.ravel(), L2.ravel()])
        best = cand[int(np.argmin(phi(cand)))]
        width /= 5.0
    return best


def finite_diff_grad(phi, x, h=1e-6):
    """Central-difference gradient; the step is ``h*max(1, |x_j|)`` per coordinate."""
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for j in range(x.shape[0]):
        step = h * max(1.0, abs(x[j]))
        e = np.zeros_like(x)
        e[j] = step
        grad[j] = (phi(x + e) - phi(x - e)) / (2.0 * step)
    return grad


def sqrt_decay(c=1.0):
    """Step rule ``k -> c/sqrt(k)``."""
    return lambda k: c / math.sqrt(k)


def box_projection(lo, hi):
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    return lambda x: np.clip(x, lo, hi)


def nullspace_projection(A, max_dim=50):
    """Orthogonal projector onto ``{x : Ax = 0}`` through the pseudoinverse."""
    A = np.asarray(A, dtype=float)
    n = A.shape[1]
    if n > max_dim:
        raise UnsupportedInstanceError(f"dense null-space projection limited to n <= {max_dim}, got {n}")
    P = np.eye(n) - np.linalg.pinv(A) @ A
    return lambda x: P @ x


def reference_solve(F, feasible_projection, x0, iters, step_rule=None, subgradient=None,
                    normalized=False):
    """Projected subgradient method with best-iterate tracking.

    Parameters
    ----------
    F : callable
        Objective, vector -> float.
    feasible_projection : callable or None
        Exact Euclidean projection onto the feasible set.
    x0 : array_like
    iters : int
    step_rule : callable, optional
        ``k -> t_k``; ``sqrt_decay(1.0)`` by default.
    subgradient : callable, optional
        Defaults to central differences of ``F``.
    normalized : bool
        Divide each step by the subgradient norm.

    Returns
    -------
    x_best, F_best
    """
    if feasible_projection is None:
        raise UnsupportedInstanceError("reference_solve needs an exact projection onto the feasible set")
    step_rule = step_rule or sqrt_decay(1.0)
    if subgradient is None:
        subgradient = lambda v: finite_diff_grad(F, v, h=1e-7)  # noqa: E731

    x = feasible_projection(np.asarray(x0, dtype=float))
    best_x, best_F = x.copy(), F(x)
    for k in range(1, iters + 1):
        g = subgradient(x)
        gn = float(np.linalg.norm(g))
        if gn == 0.0:
            break
        t = step_rule(k) / gn if normalized else step_rule(k)
        x = feasible_projection(x - t * g)
        val = F(x)
        if val < best_F:
            best_x, best_F = x.copy(), val
    return best_x, best_F
