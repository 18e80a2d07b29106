"""Operator abstractions and the closed-form proximal toolbox.

A maximally monotone operator enters the solver only through its resolvent
``(alpha, x) -> (I + alpha*A)^{-1} x``; for ``A`` the subdifferential of a
convex function ``f`` this is ``prox_{alpha f}``.  Single-valued operators
(the smooth part and the penalty) are carried together with their
cocoercivity parameter, with ``math.inf`` standing for the zero operator.

All arrays are dense float64 numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import linalg as sla
from scipy.sparse import linalg as spla

from .errors import EstimationError, ParameterError, ShapeError

__all__ = [
    "ResolventOp", "CocoerciveOp", "make_rng",
    "prox_l1", "prox_scaled_sq_norm", "prox_rank_one_quadratic",
    "prox_least_squares", "prox_dist_ball",
    "grad_half_sqdist_box", "grad_half_sq_Ax", "spectral_norm_sq",
    "zero_resolvent", "zero_cocoercive",
    "l1_block", "scaled_sq_norm_block", "rank_one_quadratic_block",
    "least_squares_block", "dist_ball_block",
    "box_distance_gradient", "quadratic_penalty_gradient",
]

# Above this size prox_least_squares switches from Cholesky to CG.
CHOLESKY_MAX_DIM = 2000
LSQ_RTOL = 1e-10


@dataclass(frozen=True)
class ResolventOp:
    """Maximally monotone operator exposed through its resolvent.

    Parameters
    ----------
    resolvent : callable
        ``resolvent(alpha, x)`` returns ``J_{alpha A}(x)``.
    label : str
        Human-readable name used in traces and error messages.
    strong_monotonicity : float, optional
        Modulus ``gamma >= 0`` if the operator is known to be strongly
        monotone.
    value : callable, optional
        The convex function ``f`` with ``A = df``, when there is one.
    """

    resolvent: Callable[[float, np.ndarray], np.ndarray]
    label: str = "A"
    strong_monotonicity: Optional[float] = None
    value: Optional[Callable[[np.ndarray], float]] = None

    def __call__(self, alpha, x):
        return self.resolvent(alpha, x)


@dataclass(frozen=True)
class CocoerciveOp:
    """Single-valued cocoercive operator.

    ``cocoercivity`` is ``math.inf`` exactly when the operator is identically
    zero.  ``potential`` is the convex function whose gradient this is, if
    known.
    """

    eval: Callable[[np.ndarray], np.ndarray]
    cocoercivity: float
    label: str = "T"
    potential: Optional[Callable[[np.ndarray], float]] = None

    def __post_init__(self):
        if not self.cocoercivity > 0:
            raise ParameterError(f"cocoercivity must be positive, got {self.cocoercivity}")

    def __call__(self, x):
        return self.eval(x)

    @property
    def is_zero(self):
        return math.isinf(self.cocoercivity)


def make_rng(seed):
    """Seeded 64-bit generator (PCG64); all experiment randomness uses this."""
    return np.random.Generator(np.random.PCG64(seed))


def _vec(x):
    return np.asarray(x, dtype=float)


def _check_step(r):
    if not r > 0:
        raise ParameterError(f"step must be positive, got {r}")


def _check_matvec(A, x):
    if A.ndim != 2 or x.ndim != 1 or A.shape[1] != x.shape[0]:
        raise ShapeError(f"cannot multiply matrix of shape {A.shape} with vector of shape {x.shape}")


# -- closed-form proximal maps ------------------------------------------------

def prox_l1(r, w, x):
    """Soft thresholding, the prox of ``w*||.||_1`` with step ``r``."""
    _check_step(r)
    if w < 0:
        raise ParameterError(f"l1 weight must be nonnegative, got {w}")
    x = _vec(x)
    return np.sign(x) * np.maximum(np.abs(x) - r * w, 0.0)


def prox_scaled_sq_norm(c, r, x):
    """Prox of ``c*||.||^2`` with step ``r``: ``x / (1 + 2cr)``."""
    _check_step(r)
    if c < 0:
        raise ParameterError(f"coefficient must be nonnegative, got {c}")
    return _vec(x) / (1.0 + 2.0 * c * r)


def prox_rank_one_quadratic(a, b, r, x):
    """Prox of ``u -> 0.5*(a.u - b)^2`` with step ``r`` (Sherman-Morrison)."""
    _check_step(r)
    a, x = _vec(a), _vec(x)
    if a.shape != x.shape:
        raise ShapeError(f"row {a.shape} and point {x.shape} differ")
    residual = a @ x - b
    return x - (r * residual / (1.0 + r * (a @ a))) * a


def prox_least_squares(A, b, r, x):
    """Prox of ``u -> 0.5*||Au - b||^2`` with step ``r``.

    Solves ``(I + r A^T A) u = x + r A^T b``; Cholesky up to
    ``CHOLESKY_MAX_DIM`` unknowns, conjugate gradients beyond.
    """
    _check_step(r)
    A, b, x = _vec(A), _vec(b), _vec(x)
    _check_matvec(A, x)
    if b.shape != (A.shape[0],):
        raise ShapeError(f"right-hand side {b.shape} does not match matrix {A.shape}")
    return _solve_shifted_normal(A, A.T @ b, r, x)


def _solve_shifted_normal(A, Atb, r, x, gram=None):
    n = x.shape[0]
    rhs = x + r * Atb
    if n <= CHOLESKY_MAX_DIM:
        G = A.T @ A if gram is None else gram
        M = r * G
        M[np.diag_indices(n)] += 1.0
        # a non-finite rhs must reach the solver's divergence check, not raise here
        return sla.cho_solve(sla.cho_factor(M, lower=True), rhs, check_finite=False)
    op = spla.LinearOperator((n, n), matvec=lambda v: v + r * (A.T @ (A @ v)), dtype=float)
    u, info = spla.cg(op, rhs, x0=x, rtol=LSQ_RTOL, atol=0.0, maxiter=10 * n)
    if info != 0:
        raise EstimationError(f"CG did not converge in prox_least_squares (info={info})", u)
    return u


def _project_ball(center, radius, x):
    d = x - center
    nd = np.linalg.norm(d)
    if nd <= radius:
        return x.copy()
    return center + d * (radius / nd)


def prox_dist_ball(center, radius, r, x):
    """Prox of ``dist(., B(center, radius))`` with step ``r``.

    Moves ``x`` toward its projection by ``min(r, dist)``.
    """
    _check_step(r)
    if not radius > 0:
        raise ParameterError(f"radius must be positive, got {radius}")
    center, x = _vec(center), _vec(x)
    if center.shape != x.shape:
        raise ShapeError(f"center {center.shape} and point {x.shape} differ")
    dist = np.linalg.norm(x - center) - radius
    if dist <= 0:
        return x.copy()
    p = _project_ball(center, radius, x)
    return x + min(1.0, r / dist) * (p - x)


# -- gradients of the constraint potentials ----------------------------------

def grad_half_sqdist_box(lo, hi, x):
    """Gradient of ``0.5*dist^2(., [lo, hi])``, i.e. ``x - clamp(x)``."""
    lo, hi, x = _vec(lo), _vec(hi), _vec(x)
    if np.any(lo > hi):
        raise ParameterError("box lower bound exceeds upper bound")
    return x - np.clip(x, lo, hi)


def grad_half_sq_Ax(A, x):
    """Gradient of ``0.5*||Ax||^2``."""
    A, x = _vec(A), _vec(x)
    _check_matvec(A, x)
    return A.T @ (A @ x)


def spectral_norm_sq(A, tol=1e-12, max_iters=10000):
    """Largest eigenvalue of ``A^T A`` by power iteration.

    Raises
    ------
    EstimationError
        If the relative change of the Rayleigh quotient stays above ``tol``
        for ``max_iters`` iterations; ``best`` carries the last estimate.
    """
    A = _vec(A)
    if A.ndim != 2:
        raise ShapeError(f"expected a matrix, got shape {A.shape}")
    if not np.any(A):
        raise ParameterError("spectral norm estimate needs a nonzero matrix")
    # fixed start keeps the estimate deterministic
    v = make_rng(0).standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iters):
        w = A.T @ (A @ v)
        lam_new = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # start vector fell in the null space
            v = np.ones(A.shape[1]) / math.sqrt(A.shape[1])
            continue
        v = w / nw
        if abs(lam_new - lam) <= tol * abs(lam_new):
            return lam_new
        lam = lam_new
    raise EstimationError(f"power iteration did not reach tol={tol} in {max_iters} iterations", lam)


# -- operator factories ---------------------------------------------------------

def zero_resolvent():
    return ResolventOp(resolvent=lambda alpha, x: _vec(x).copy(), label="zero",
                       value=lambda x: 0.0)


def zero_cocoercive():
    return CocoerciveOp(eval=lambda x: np.zeros_like(_vec(x)), cocoercivity=math.inf,
                        label="zero", potential=lambda x: 0.0)


def l1_block(w):
    if w < 0:
        raise ParameterError(f"l1 weight must be nonnegative, got {w}")
    def resolvent(r, x):
        return np.sign(x) * np.maximum(np.abs(x) - r * w, 0.0)

    return ResolventOp(resolvent=resolvent, label=f"{w:g}*l1",
                       value=lambda x: w * float(np.sum(np.abs(x))))


def scaled_sq_norm_block(c):
    """``c*||.||^2``, strongly monotone with modulus ``2c``."""
    if c < 0:
        raise ParameterError(f"coefficient must be nonnegative, got {c}")
    return ResolventOp(resolvent=lambda r, x: x / (1.0 + 2.0 * c * r),
                       label=f"{c:g}*sqnorm", strong_monotonicity=2.0 * c,
                       value=lambda x: c * float(x @ x))


def rank_one_quadratic_block(a, b, label="rank1"):
    a = _vec(a).copy()
    b = float(b)
    aa = float(a @ a)

    # hot path of the split elastic net: no re-validation per call
    def resolvent(r, x):
        return x - (r * (a @ x - b) / (1.0 + r * aa)) * a

    return ResolventOp(resolvent=resolvent, label=label,
                       value=lambda x: 0.5 * float(a @ x - b) ** 2)


def least_squares_block(A, b):
    """``0.5*||Ax - b||^2`` with the Gram matrix cached between calls."""
    A = _vec(A).copy()
    b = _vec(b).copy()
    if A.ndim != 2 or b.shape != (A.shape[0],):
        raise ShapeError(f"matrix {A.shape} and vector {b.shape} are incompatible")
    Atb = A.T @ b
    gram = A.T @ A if A.shape[1] <= CHOLESKY_MAX_DIM else None

    def resolvent(r, x):
        _check_step(r)
        x = _vec(x)
        _check_matvec(A, x)
        return _solve_shifted_normal(A, Atb, r, x, gram=gram)

    def value(x):
        res = A @ x - b
        return 0.5 * float(res @ res)

    return ResolventOp(resolvent=resolvent, label="least_squares", value=value)


def dist_ball_block(center, radius=1.0, label="dist_ball"):
    center = _vec(center).copy()

    def value(x):
        return max(float(np.linalg.norm(x - center)) - radius, 0.0)

    return ResolventOp(resolvent=lambda r, x: prox_dist_ball(center, radius, r, x),
                       label=label, value=value)


def box_distance_gradient(lo, hi):
    """Gradient of ``0.5*dist^2(., [lo, hi])``; 1-cocoercive.

    ``lo`` and ``hi`` may be scalars (a cube) or per-coordinate arrays.
    """
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    if np.any(lo > hi):
        raise ParameterError("box lower bound exceeds upper bound")
    if lo.ndim == 0 and hi.ndim == 0:
        lo, hi = float(lo), float(hi)

    def grad(x):
        return x - np.minimum(np.maximum(x, lo), hi)

    def potential(x):
        d = grad(x)
        return 0.5 * float(d @ d)

    return CocoerciveOp(eval=grad, cocoercivity=1.0, label="grad_half_sqdist_box",
                        potential=potential)


def quadratic_penalty_gradient(A):
    """Gradient of ``0.5*||Ax||^2``; cocoercive with parameter ``1/||A||^2``."""
    A = _vec(A).copy()
    L = spectral_norm_sq(A)

    def potential(x):
        y = A @ x
        return 0.5 * float(y @ y)

    return CocoerciveOp(eval=lambda x: grad_half_sq_Ax(A, x), cocoercivity=1.0 / L,
                        label="grad_half_sq_Ax", potential=potential)
