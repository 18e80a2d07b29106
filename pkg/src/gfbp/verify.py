"""Self-check suite behind ``gfbp verify``.

Every check compares a solver-side quantity against an independent oracle
and returns a :class:`CheckResult`.  Operators are looked up on the module
at call time so that a patched implementation is what gets checked.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import operators as ops
from . import oracle
from .problems import ElasticNetConfig, build_elastic_net, gen_regression_data
from .schedules import make_default
from .solver import GfbpProblem, gfbp_step, init_state

__all__ = ["CheckResult", "run_checks", "CHECKS"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def __post_init__(self):
        self.passed = bool(self.passed)


def _grid_1d(r, x):
    half = abs(x) + 2.0 * r + 2.0
    return oracle.GridSpec(x - half, x + half, 4001)


def check_prox_l1(rng, draws=100):
    worst = 0.0
    for _ in range(draws):
        r, w, x = rng.uniform(0.05, 3.0), rng.uniform(0.0, 2.0), rng.uniform(-5.0, 5.0)
        grid = _grid_1d(r, x)
        ref = oracle.grid_prox(lambda U: w * np.abs(U[:, 0]), r, x, grid)[0]
        got = ops.prox_l1(r, w, np.array([x]))[0]
        worst = max(worst, abs(got - ref) / grid.spacing)
    return CheckResult("prox_l1 vs grid", worst <= 2.0, f"max error {worst:.3g} grid spacings")


def check_prox_sq_norm(rng, draws=100):
    worst = 0.0
    for _ in range(draws):
        r, c, x = rng.uniform(0.05, 3.0), rng.uniform(0.0, 2.0), rng.uniform(-5.0, 5.0)
        grid = _grid_1d(r, x)
        ref = oracle.grid_prox(lambda U: c * U[:, 0] ** 2, r, x, grid)[0]
        got = ops.prox_scaled_sq_norm(c, r, np.array([x]))[0]
        worst = max(worst, abs(got - ref) / grid.spacing)
    return CheckResult("prox_scaled_sq_norm vs grid", worst <= 2.0,
                       f"max error {worst:.3g} grid spacings")


def check_prox_rank_one(rng, draws=100):
    worst = 0.0
    for _ in range(draws):
        r = rng.uniform(0.05, 2.0)
        a, x = rng.uniform(-1.5, 1.5, 2), rng.uniform(-3.0, 3.0, 2)
        b = rng.uniform(-2.0, 2.0)
        grid = oracle.GridSpec(-8.0, 8.0, 321)
        ref = oracle.grid_prox(lambda U: 0.5 * (U @ a - b) ** 2, r, x, grid)
        got = ops.prox_rank_one_quadratic(a, b, r, x)
        worst = max(worst, float(np.linalg.norm(got - ref, np.inf)) / grid.spacing)
    return CheckResult("prox_rank_one_quadratic vs grid", worst <= 2.0,
                       f"max error {worst:.3g} grid spacings")


def check_prox_least_squares(rng, draws=100):
    worst = 0.0
    for _ in range(draws):
        r = rng.uniform(0.05, 2.0)
        A, b, x = rng.uniform(-1.0, 1.0, (3, 2)), rng.uniform(-1.0, 1.0, 3), rng.uniform(-3.0, 3.0, 2)
        grid = oracle.GridSpec(-8.0, 8.0, 321)
        ref = oracle.grid_prox(lambda U: 0.5 * np.sum((U @ A.T - b) ** 2, axis=1), r, x, grid)
        got = ops.prox_least_squares(A, b, r, x)
        worst = max(worst, float(np.linalg.norm(got - ref, np.inf)) / grid.spacing)
    return CheckResult("prox_least_squares vs grid", worst <= 2.0,
                       f"max error {worst:.3g} grid spacings")


def check_prox_dist_ball(rng, draws=100):
    worst = 0.0
    for _ in range(draws):
        r, rho = rng.uniform(0.05, 3.0), rng.uniform(0.3, 2.0)
        center, x = rng.uniform(-2.0, 2.0, 2), rng.uniform(-4.0, 4.0, 2)
        grid = oracle.GridSpec(-8.0, 8.0, 321)

        def dist(U):
            return np.maximum(np.linalg.norm(U - center, axis=1) - rho, 0.0)

        ref = oracle.grid_prox(dist, r, x, grid)
        got = ops.prox_dist_ball(center, rho, r, x)
        worst = max(worst, float(np.linalg.norm(got - ref, np.inf)) / grid.spacing)
    return CheckResult("prox_dist_ball vs grid", worst <= 2.0,
                       f"max error {worst:.3g} grid spacings")


def check_lsq_identity(rng, draws=100):
    worst = 0.0
    for _ in range(draws):
        n = int(rng.integers(1, 8))
        r, x = rng.uniform(0.05, 3.0), rng.standard_normal(n)
        u = ops.prox_least_squares(np.eye(n), np.zeros(n), r, x)
        v = ops.prox_scaled_sq_norm(0.5, r, x)
        worst = max(worst, float(np.max(np.abs(u - v))))
    return CheckResult("prox_least_squares(I, 0) == prox_scaled_sq_norm(1/2)", worst <= 1e-10,
                       f"max difference {worst:.3g}")


def _rel_err(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-12))


def check_grad_box(rng, draws=100):
    worst = 0.0
    for _ in range(draws):
        n = int(rng.integers(1, 6))
        x = rng.uniform(-3.0, 4.0, n)
        lo, hi = np.zeros(n), np.ones(n)

        def phi(v):
            d = v - np.minimum(np.maximum(v, lo), hi)
            return 0.5 * float(d @ d)

        fd = oracle.finite_diff_grad(phi, x)
        got = ops.grad_half_sqdist_box(lo, hi, x)
        if np.linalg.norm(fd) > 1e-8:
            worst = max(worst, _rel_err(got, fd))
    return CheckResult("grad_half_sqdist_box vs finite differences", worst <= 1e-5,
                       f"max relative error {worst:.3g}")


def check_grad_Ax(rng, draws=100):
    worst = 0.0
    for _ in range(draws):
        m, n = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        A, x = rng.standard_normal((m, n)), rng.standard_normal(n)
        fd = oracle.finite_diff_grad(lambda v: 0.5 * float(np.sum((A @ v) ** 2)), x)
        got = ops.grad_half_sq_Ax(A, x)
        if np.linalg.norm(fd) > 1e-8:
            worst = max(worst, _rel_err(got, fd))
    return CheckResult("grad_half_sq_Ax vs finite differences", worst <= 1e-5,
                       f"max relative error {worst:.3g}")


def check_passty(rng, steps=50):
    """With B = C = 0 a step is exactly the composition of the resolvents."""
    n = 4
    A, b = rng.standard_normal((3, n)), rng.standard_normal(3)
    blocks = [ops.least_squares_block(A, b), ops.l1_block(0.3), ops.scaled_sq_norm_block(0.7)]
    problem = GfbpProblem(blocks=blocks, dim=n)
    sched = make_default(0.9)
    state = init_state(rng.standard_normal(n), sched)
    direct = state.x.copy()
    identical = True
    for k in range(1, steps + 1):
        state = gfbp_step(problem, sched, state)
        a = sched.alpha(k)
        for blk in blocks:
            direct = blk.resolvent(a, direct)
        identical &= bool(np.array_equal(state.x, direct))
    return CheckResult("Passty reduction (B = C = 0)", identical,
                       f"{steps} steps {'bit-identical' if identical else 'differ'}")


def check_split_identity(rng, points=100):
    A, b, _ = gen_regression_data(6, 9, int(rng.integers(0, 2 ** 31)))
    p_full = build_elastic_net(ElasticNetConfig(A, b, 0.5, split=False))
    p_split = build_elastic_net(ElasticNetConfig(A, b, 0.5, split=True))
    worst = 0.0
    for _ in range(points):
        x = rng.uniform(-2.0, 3.0, 9)
        f_blocks = sum(blk.value(x) for blk in p_split.blocks)
        for got, ref in ((p_full.objective(x), f_blocks), (p_split.objective(x), f_blocks),
                         (p_full.constraint_value(x), p_split.constraint_value(x))):
            worst = max(worst, abs(got - ref) / max(abs(ref), 1e-300))
    return CheckResult("split vs non-split objective identity", worst < 1e-10,
                       f"max relative difference {worst:.3g}")


CHECKS = [check_prox_l1, check_prox_sq_norm, check_prox_rank_one, check_prox_least_squares,
          check_prox_dist_ball, check_lsq_identity, check_grad_box, check_grad_Ax,
          check_passty, check_split_identity]


def run_checks(seed=0):
    rng = ops.make_rng(seed)
    return [check(rng) for check in CHECKS]
