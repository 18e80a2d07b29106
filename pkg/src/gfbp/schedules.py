"""Step-size and penalty sequences and their admissibility checks.

The power family ``alpha_k = a / k**p`` and ``beta_k = xi * k**q`` makes the
conditions on the sequences decidable from the exponents:

* ``alpha`` is square summable but not summable iff ``1/2 < p <= 1``;
* ``alpha_k * beta_k = a*xi*k**(q-p)`` has a positive finite limit iff ``q == p``;
* that limit ``a*xi`` must stay below the relevant cocoercivity bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List

from .errors import ParameterError

__all__ = ["StepSchedule", "CustomSchedule", "Check", "ValidationReport",
           "make_default", "validate", "cocoercivity_bound"]


@dataclass(frozen=True)
class StepSchedule:
    a: float = 1.0
    p: float = 1.0
    xi: float = 0.9
    q: float = 1.0

    def __post_init__(self):
        if not self.a > 0:
            raise ParameterError(f"schedule scale a must be positive, got {self.a}")
        if not self.xi > 0:
            raise ParameterError(f"penalty scale xi must be positive, got {self.xi}")

    def alpha(self, k):
        return self.a / k ** self.p

    def beta(self, k):
        return self.xi * k ** self.q

    def describe(self):
        return f"alpha_k={self.a:g}/k^{self.p:g}, beta_k={self.xi:g}*k^{self.q:g}"


@dataclass(frozen=True)
class CustomSchedule:
    """Arbitrary user sequences; never validated."""

    alpha_fn: Callable[[int], float]
    beta_fn: Callable[[int], float]
    name: str = "custom"

    def alpha(self, k):
        return self.alpha_fn(k)

    def beta(self, k):
        return self.beta_fn(k)

    def describe(self):
        return self.name


def make_default(xi=0.9):
    """``alpha_k = 1/k``, ``beta_k = xi*k``."""
    if not xi > 0:
        raise ParameterError(f"xi must be positive, got {xi}")
    return StepSchedule(a=1.0, p=1.0, xi=xi, q=1.0)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


@dataclass
class ValidationReport:
    checks: List[Check] = field(default_factory=list)
    validated: bool = True

    @property
    def ok(self):
        return self.validated and all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def __str__(self):
        if not self.validated:
            return "unvalidated (custom schedule)"
        lines = [f"[{'pass' if c.passed else 'FAIL'}] {c.name}: {c.detail}" for c in self.checks]
        return "\n".join(lines)


def validate(s, mu_bound):
    """Check a schedule against the step-size assumptions.

    Parameters
    ----------
    s : StepSchedule or CustomSchedule
    mu_bound : float
        Upper bound for ``lim alpha_k*beta_k``; ``math.inf`` makes the bound
        vacuous.

    Returns
    -------
    ValidationReport
        Custom schedules come back with ``validated=False`` and no checks.
    """
    if not isinstance(s, StepSchedule):
        return ValidationReport(validated=False)
    checks = [
        Check("alpha in l2 minus l1", 0.5 < s.p <= 1.0,
              f"need 1/2 < p <= 1, got p={s.p:g}"),
        Check("alpha*beta has positive finite limit", s.q == s.p,
              f"need q == p, got p={s.p:g}, q={s.q:g}"),
    ]
    prod = s.a * s.xi
    if math.isinf(mu_bound):
        checks.append(Check("alpha*beta below cocoercivity", True,
                            f"a*xi={prod:g}, bound vacuous (zero operator)"))
    else:
        checks.append(Check("alpha*beta below cocoercivity", 0 < prod < mu_bound,
                            f"need 0 < a*xi < {mu_bound:g}, got {prod:g}"))
    return ValidationReport(checks=checks)


def cocoercivity_bound(smooth, penalty, rule="auto"):
    """Pick the cocoercivity parameter that bounds ``alpha_k*beta_k``.

    The bound is stated in terms of the smooth operator ``B``, while the
    penalty analysis runs through ``C``; ``rule`` selects ``"smooth"``,
    ``"penalty"``, the stricter ``"min"`` of the two, or ``"auto"``, which
    uses ``B`` unless it is the zero operator and ``C`` otherwise.
    """
    mu_b, mu_c = smooth.cocoercivity, penalty.cocoercivity
    if rule == "smooth":
        return mu_b
    if rule == "penalty":
        return mu_c
    if rule == "min":
        return min(mu_b, mu_c)
    if rule == "auto":
        return mu_c if math.isinf(mu_b) else mu_b
    raise ParameterError(f"unknown bound rule {rule!r}")
