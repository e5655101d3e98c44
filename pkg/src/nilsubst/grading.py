"""Positive gradings compatible with a fixed basis of a nilpotent Lie algebra.

Every nonzero structure constant along [X_i, X_j] -> X_k forces the linear
relation a_i + a_j = a_k on the degrees.  Exact elimination gives the
solution space; Fourier-Motzkin decides whether it meets the open positive
orthant; a bounded search then returns the canonical integer grading.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, lcm
from typing import Sequence

from .group import LieAlgebra
from .linalg import nullspace, rref


@dataclass(frozen=True)
class GradingProblem:
    dim: int
    equations: tuple[tuple[int, int, int], ...]

    @classmethod
    def from_algebra(cls, algebra: LieAlgebra) -> "GradingProblem":
        return cls(algebra.dim, tuple(algebra.relations()))

    def matrix(self) -> list[list[Fraction]]:
        rows = []
        for i, j, k in self.equations:
            row = [Fraction(0)] * self.dim
            row[i] += 1
            row[j] += 1
            row[k] -= 1
            rows.append(row)
        return rows


@dataclass(frozen=True)
class Inequality:
    """coeffs . t + const > 0 (strict) or >= 0."""

    coeffs: tuple[Fraction, ...]
    const: Fraction = Fraction(0)
    strict: bool = True

    def holds(self, point: Sequence) -> bool:
        v = sum((Fraction(c) * Fraction(x) for c, x in zip(self.coeffs, point)), self.const)
        return v > 0 if self.strict else v >= 0

    def normalized(self) -> "Inequality":
        scale = max((abs(c) for c in self.coeffs + (self.const,)), default=0)
        if scale == 0:
            return self
        return Inequality(tuple(c / scale for c in self.coeffs), self.const / scale, self.strict)


@dataclass
class FourierMotzkin:
    """Eliminates variables 0, 1, ... in order and keeps every stage."""

    stages: list[list[Inequality]]
    feasible: bool

    def contains(self, point: Sequence) -> bool:
        return all(q.holds(point) for q in self.stages[0])

    def sample_point(self) -> list[Fraction] | None:
        if not self.feasible:
            return None
        n = len(self.stages[0][0].coeffs) if self.stages[0] else len(self.stages) - 1
        point = [Fraction(0)] * n
        for var in reversed(range(n)):
            lo = hi = None
            lo_strict = hi_strict = False
            for q in self.stages[var]:
                c = q.coeffs[var]
                if c == 0:
                    continue
                rest = q.const + sum(q.coeffs[j] * point[j] for j in range(var + 1, n))
                bound = -rest / c
                if c > 0 and (lo is None or bound > lo or (bound == lo and q.strict)):
                    lo, lo_strict = bound, q.strict
                if c < 0 and (hi is None or bound < hi or (bound == hi and q.strict)):
                    hi, hi_strict = bound, q.strict
            if lo is not None and hi is not None:
                point[var] = (lo + hi) / 2 if lo != hi else lo
            elif lo is not None:
                point[var] = lo + 1
            elif hi is not None:
                point[var] = hi - 1
        return point


def fourier_motzkin(system: Sequence[Inequality], nvars: int) -> FourierMotzkin:
    current = list(dict.fromkeys(q.normalized() for q in system))
    stages = [current]
    for var in range(nvars):
        pos = [q for q in current if q.coeffs[var] > 0]
        neg = [q for q in current if q.coeffs[var] < 0]
        nxt = [q for q in current if q.coeffs[var] == 0]
        for p in pos:
            for m in neg:
                a, b = -m.coeffs[var], p.coeffs[var]
                coeffs = tuple(a * x + b * y for x, y in zip(p.coeffs, m.coeffs))
                nxt.append(Inequality(coeffs, a * p.const + b * m.const, p.strict or m.strict).normalized())
        current = list(dict.fromkeys(nxt))
        stages.append(current)
    feasible = all(q.holds([0] * nvars) for q in current)
    return FourierMotzkin(stages, feasible)


@dataclass
class GradingSolution:
    kind: str
    degrees: tuple[int, ...] | None
    kernel_basis: list[list[Fraction]]
    particular: list[Fraction]
    certificate: FourierMotzkin | None = field(default=None, repr=False)

    @property
    def feasible(self) -> bool:
        return self.kind == "feasible"


def grading_kernel(problem: GradingProblem | LieAlgebra) -> list[list[Fraction]]:
    """Basis of all degree vectors satisfying the bracket relations."""
    if isinstance(problem, LieAlgebra):
        problem = GradingProblem.from_algebra(problem)
    return nullspace(problem.matrix(), problem.dim)


def positivity_system(basis: Sequence[Sequence[Fraction]], dim: int) -> list[Inequality]:
    """Strict inequalities in the basis coefficients expressing a_i > 0 for every i."""
    return [Inequality(tuple(Fraction(b[i]) for b in basis)) for i in range(dim)]


def _integerize(v: Sequence[Fraction]) -> tuple[int, ...]:
    den = lcm(*(Fraction(x).denominator for x in v)) if v else 1
    ints = [int(Fraction(x) * den) for x in v]
    g = 0
    for x in ints:
        g = gcd(g, x)
    return tuple(x // g for x in ints) if g else tuple(ints)


def _canonical(problem: GradingProblem, upper: int) -> tuple[int, ...]:
    """Positive integer solution minimising (max degree, lexicographic order)."""
    red, pivots = rref(problem.matrix(), problem.dim) if problem.equations else ([], [])
    free = [c for c in range(problem.dim) if c not in pivots]
    for bound in range(1, upper + 1):
        best = None
        stack: list[list[int]] = [[]]
        while stack:
            chosen = stack.pop()
            if len(chosen) < len(free):
                stack.extend(chosen + [v] for v in range(bound, 0, -1))
                continue
            alpha: list = [0] * problem.dim
            for c, v in zip(free, chosen):
                alpha[c] = v
            ok = True
            for row, p in zip(red, pivots):
                val = -sum(row[c] * alpha[c] for c in free)
                if val.denominator != 1 or not 1 <= val <= bound:
                    ok = False
                    break
                alpha[p] = int(val)
            if ok and max(alpha) == bound:
                cand = tuple(alpha)
                if best is None or cand < best:
                    best = cand
        if best is not None:
            return best
    raise AssertionError("no integer grading below the rational bound")


def solve_grading(problem: GradingProblem | LieAlgebra) -> GradingSolution:
    if isinstance(problem, LieAlgebra):
        problem = GradingProblem.from_algebra(problem)
    d = problem.dim
    basis = grading_kernel(problem)
    particular = [Fraction(0)] * d
    if not basis:
        return GradingSolution("infeasible", None, basis, particular, None)
    fm = fourier_motzkin(positivity_system(basis, d), len(basis))
    if not fm.feasible:
        return GradingSolution("infeasible", None, basis, particular, fm)
    t = fm.sample_point()
    alpha = [sum((Fraction(b[i]) * x for b, x in zip(basis, t)), Fraction(0)) for i in range(d)]
    assert all(a > 0 for a in alpha)
    upper = max(_integerize(alpha))
    return GradingSolution("feasible", _canonical(problem, upper), basis, particular, fm)


def verify_grading(algebra: LieAlgebra, degrees: Sequence[int]) -> bool:
    if len(degrees) != algebra.dim:
        raise ValueError("degree vector has the wrong length")
    if any(a <= 0 for a in degrees):
        return False
    return all(degrees[i] + degrees[j] == degrees[k] for i, j, k in algebra.relations())
