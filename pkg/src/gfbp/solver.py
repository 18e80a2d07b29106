"""Generalized forward-backward iteration with a penalty term.

One step from ``x_k`` with ``alpha = alpha_k`` and ``beta = beta_k``::

    psi_0 = x_k - alpha*B(x_k) - alpha*beta*C(x_k)
    psi_i = J_{alpha A_i}(psi_{i-1})      for i = 1..m, in declaration order
    x_{k+1} = psi_m

Alongside the iterates the solver keeps ``tau_k = sum alpha_n`` and
``sum alpha_n x_n`` so that the ergodic average ``z_k`` is available at any
time.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Optional, Sequence

import numpy as np

from .errors import DivergenceError, ParameterError, ShapeError
from .operators import CocoerciveOp, ResolventOp, zero_cocoercive

__all__ = ["GfbpProblem", "SolverState", "StoppingRule", "TraceRow", "RunReport",
           "init_state", "gfbp_step", "ergodic_average", "residual_C",
           "inner_displacement", "run", "STOP_MODES", "TRACE_COLUMNS"]

STOP_MODES = ("relative_change", "max_only", "residual")
TRACE_COLUMNS = ("k", "F", "g", "norm_C", "inner_disp", "alpha", "beta", "elapsed_s")
# relative-change denominators below this are replaced by 1
TINY_DENOMINATOR = 1e-30


@dataclass(frozen=True)
class GfbpProblem:
    """Find ``x`` with ``0 in sum A_i(x) + B(x) + N_{zer C}(x)``."""

    blocks: Sequence[ResolventOp]
    dim: int
    smooth: CocoerciveOp = field(default_factory=zero_cocoercive)
    penalty: CocoerciveOp = field(default_factory=zero_cocoercive)
    objective: Optional[Callable[[np.ndarray], float]] = None
    constraint_value: Optional[Callable[[np.ndarray], float]] = None
    name: str = "gfbp"

    def __post_init__(self):
        if len(self.blocks) < 1:
            raise ParameterError("a problem needs at least one resolvent block")
        if self.dim < 1:
            raise ParameterError(f"dimension must be positive, got {self.dim}")

    @property
    def m(self):
        return len(self.blocks)

    @property
    def strongly_monotone_last(self):
        gamma = self.blocks[-1].strong_monotonicity
        return gamma is not None and gamma > 0


@dataclass(frozen=True)
class SolverState:
    k: int
    x: np.ndarray
    tau: float
    weighted_sum: np.ndarray
    # psi_0..psi_m of the sweep that produced x, empty before the first step
    sweep: tuple = ()
    penalty_norm: float = math.nan


@dataclass(frozen=True)
class StoppingRule:
    tol: float = 1e-5
    max_iters: int = 200_000
    mode: str = "relative_change"

    def __post_init__(self):
        if not self.tol > 0:
            raise ParameterError(f"tolerance must be positive, got {self.tol}")
        if self.max_iters < 1:
            raise ParameterError(f"max_iters must be at least 1, got {self.max_iters}")
        if self.mode not in STOP_MODES:
            raise ParameterError(f"unknown stopping mode {self.mode!r}; choose from {STOP_MODES}")

    def describe(self):
        if self.mode == "max_only":
            return f"max_only(max_iters={self.max_iters})"
        return f"{self.mode}(tol={self.tol:g}, max_iters={self.max_iters})"


class TraceRow(NamedTuple):
    k: int
    F: float
    g: float
    norm_C: float
    inner_disp: float
    alpha: float
    beta: float
    elapsed_s: float


@dataclass
class RunReport:
    iterations: int
    elapsed: float
    reason: str
    trace: List[TraceRow]
    x: np.ndarray
    z: np.ndarray
    final_F: float
    final_g: float
    final_norm_C: float
    stopping: str = ""
    schedule: str = ""

    def trace_array(self, column):
        return np.array([getattr(r, column) for r in self.trace])

    def write_trace(self, fh, include_timing=True):
        cols = TRACE_COLUMNS if include_timing else TRACE_COLUMNS[:-1]
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in self.trace:
            vals = row if include_timing else row[:-1]
            w.writerow([v if isinstance(v, int) else repr(float(v)) for v in vals])

    def trace_csv(self, include_timing=True):
        buf = io.StringIO()
        self.write_trace(buf, include_timing=include_timing)
        return buf.getvalue()

    def summary(self):
        return {
            "iterations": self.iterations,
            "elapsed_s": self.elapsed,
            "termination": self.reason,
            "stopping_rule": self.stopping,
            "schedule": self.schedule,
            "final_F": self.final_F,
            "final_g": self.final_g,
            "final_norm_C": self.final_norm_C,
        }


def init_state(x1, schedule):
    """State at ``k = 1``; ``x_1`` already counts in the ergodic sum."""
    x1 = np.array(x1, dtype=float)
    a1 = schedule.alpha(1)
    return SolverState(k=1, x=x1, tau=a1, weighted_sum=a1 * x1)


def _raise_divergence(problem, sweep, k):
    labels = ["forward step"] + [f"block {i} ({blk.label})" for i, blk in enumerate(problem.blocks, 1)]
    for where, psi in zip(labels, sweep):
        if not np.all(np.isfinite(psi)):
            raise DivergenceError(f"non-finite values after {where} at iteration k={k}",
                                  k=k, block=where)


def gfbp_step(problem, schedule, state):
    """Advance from ``x_k`` to ``x_{k+1}``.

    Raises
    ------
    DivergenceError
        If the forward step or any resolvent produces a non-finite value.
    """
    k, x = state.k, state.x
    if x.shape != (problem.dim,):
        raise ShapeError(f"iterate has shape {x.shape}, problem dimension is {problem.dim}")
    alpha, beta = schedule.alpha(k), schedule.beta(k)

    Cx = problem.penalty.eval(x)
    psi = x - alpha * beta * Cx
    if not problem.smooth.is_zero:
        psi = psi - alpha * problem.smooth.eval(x)

    sweep = [psi]
    for block in problem.blocks:
        psi = block.resolvent(alpha, psi)
        sweep.append(psi)
    # non-finite values propagate to the end of the sweep; locate them only then
    if not np.all(np.isfinite(psi)):
        _raise_divergence(problem, sweep, k)

    a_next = schedule.alpha(k + 1)
    return SolverState(k=k + 1, x=psi, tau=state.tau + a_next,
                       weighted_sum=state.weighted_sum + a_next * psi,
                       sweep=tuple(sweep), penalty_norm=float(np.linalg.norm(Cx)))


def ergodic_average(state):
    return state.weighted_sum / state.tau


def residual_C(problem, x):
    return float(np.linalg.norm(problem.penalty.eval(x)))


def inner_displacement(state):
    """``sum_i ||psi_i - psi_{i-1}||^2`` over the last sweep."""
    s = state.sweep
    total = 0.0
    for prev, cur in zip(s[:-1], s[1:]):
        d = cur - prev
        total += float(d @ d)
    return total


def _rel_change(new, old):
    den = abs(old)
    if den < TINY_DENOMINATOR:
        den = 1.0
    return abs(new - old) / den


def run(problem, schedule, stopping=None, trace_every=1, x1=None):
    """Iterate until the stopping rule fires.

    Parameters
    ----------
    problem : GfbpProblem
    schedule : StepSchedule or CustomSchedule
    stopping : StoppingRule, optional
        Defaults to relative change with tolerance ``1e-5``.
    trace_every : int
        Record every ``trace_every``-th step (the first and last steps are
        always recorded).
    x1 : array_like, optional
        Starting point, zeros by default.

    Returns
    -------
    RunReport
    """
    stopping = stopping or StoppingRule()
    if trace_every < 1:
        raise ParameterError(f"trace_every must be at least 1, got {trace_every}")
    if stopping.mode == "relative_change" and (problem.objective is None
                                               or problem.constraint_value is None):
        raise ParameterError("relative_change stopping needs both objective and constraint_value")

    F = problem.objective or (lambda x: math.nan)
    g = problem.constraint_value or (lambda x: math.nan)
    state = init_state(np.zeros(problem.dim) if x1 is None else x1, schedule)
    if state.x.shape != (problem.dim,):
        raise ShapeError(f"starting point has shape {state.x.shape}, expected ({problem.dim},)")

    relative = stopping.mode == "relative_change"
    F_k, g_k = F(state.x), g(state.x)
    trace = []
    reason = "max_iters"
    steps = 0
    start = time.perf_counter()
    while steps < stopping.max_iters:
        k = state.k
        new = gfbp_step(problem, schedule, state)
        steps += 1
        last = steps == stopping.max_iters
        record = k == 1 or k % trace_every == 0
        need_values = relative or record or last

        F_new = g_new = math.nan
        if need_values:
            F_new, g_new = F(new.x), g(new.x)

        stop = None
        if relative:
            change = max(_rel_change(F_new, F_k), _rel_change(g_new, g_k))
            if change <= stopping.tol:
                stop = "relative_change"
        elif stopping.mode == "residual":
            step_len = float(np.linalg.norm(new.x - state.x))
            if step_len <= stopping.tol * max(1.0, float(np.linalg.norm(state.x))):
                stop = "residual"

        if record or last or stop:
            if math.isnan(F_k) and problem.objective is not None:
                F_k, g_k = F(state.x), g(state.x)
            trace.append(TraceRow(k, F_k, g_k, new.penalty_norm, inner_displacement(new),
                                  schedule.alpha(k), schedule.beta(k),
                                  time.perf_counter() - start))
        state, F_k, g_k = new, F_new, g_new
        if stop:
            reason = stop
            break
    elapsed = time.perf_counter() - start

    if math.isnan(F_k) and problem.objective is not None:
        F_k, g_k = F(state.x), g(state.x)
    return RunReport(iterations=steps, elapsed=elapsed, reason=reason, trace=trace,
                     x=state.x, z=ergodic_average(state), final_F=F_k, final_g=g_k,
                     final_norm_C=residual_C(problem, state.x),
                     stopping=stopping.describe(), schedule=schedule.describe())
