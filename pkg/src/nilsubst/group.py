"""Graded nilpotent groups given by explicit polynomial laws.

Elements are plain tuples of exact rationals (``int`` or ``Fraction``).  A
group law on ``R^d`` is stored as one correction polynomial per coordinate:

    (g * h)_i = g_i + h_i + p_i(g, h)

with ``p_i`` written in the symbols ``x1..xd`` (coordinates of ``g``) and
``y1..yd`` (coordinates of ``h``).  Laws built from structure constants go
through the Baker-Campbell-Hausdorff series (Dynkin's form).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Mapping, Sequence

from .linalg import rref
from .poly import Poly, canon

Element = tuple


class NotNilpotentError(ValueError):
    pass


class LieAlgebra:
    """Structure constants [X_i, X_j] = sum_k c_ijk X_k (0-based, i < j stored)."""

    def __init__(self, dim: int, brackets: Mapping[tuple[int, int], Mapping[int, object]], name: str = ""):
        self.dim = dim
        self.name = name
        table: dict[tuple[int, int], dict[int, object]] = {}
        for (i, j), targets in brackets.items():
            if not (0 <= i < dim and 0 <= j < dim) or i == j:
                raise ValueError(f"bad bracket index ({i}, {j})")
            sign = 1
            if i > j:
                i, j, sign = j, i, -1
            row = table.setdefault((i, j), {})
            for k, c in targets.items():
                if not 0 <= k < dim:
                    raise ValueError(f"bad bracket target {k}")
                c = c * sign if isinstance(c, Poly) else canon(Fraction(c) * sign)
                row[k] = row.get(k, 0) + c
        self.brackets = {
            key: {k: c for k, c in row.items() if c != 0} for key, row in sorted(table.items())
        }
        self.brackets = {k: v for k, v in self.brackets.items() if v}

    def __eq__(self, other):
        return isinstance(other, LieAlgebra) and (self.dim, self.brackets) == (other.dim, other.brackets)

    def __repr__(self):
        return f"LieAlgebra({self.name or self.dim}, {len(self.brackets)} brackets)"

    def relations(self):
        """Triples (i, j, k) with a nonzero constant in [X_i, X_j] along X_k."""
        return [(i, j, k) for (i, j), row in self.brackets.items() for k in row]

    def bracket(self, u: Sequence, v: Sequence) -> list:
        out: list = [0] * self.dim
        for (i, j), row in self.brackets.items():
            c = u[i] * v[j] - u[j] * v[i]
            if c == 0:
                continue
            for k, a in row.items():
                out[k] = out[k] + a * c
        return out

    def basis(self, i: int) -> list:
        return [1 if k == i else 0 for k in range(self.dim)]

    def jacobi_violations(self) -> list[tuple[int, int, int]]:
        bad = []
        e = self.basis
        for i, j, k in combinations(range(self.dim), 3):
            a = self.bracket(e(i), self.bracket(e(j), e(k)))
            b = self.bracket(e(j), self.bracket(e(k), e(i)))
            c = self.bracket(e(k), self.bracket(e(i), e(j)))
            if any(x + y + z != 0 for x, y, z in zip(a, b, c)):
                bad.append((i, j, k))
        return bad

    def lower_central_series(self) -> list[int]:
        """Dimensions of g = g^1 > g^2 > ... down to the first zero term."""
        current = [self.basis(i) for i in range(self.dim)]
        dims = [self.dim]
        for _ in range(self.dim + 1):
            spanning = [self.bracket(self.basis(i), w) for i in range(self.dim) for w in current]
            red, _ = rref(spanning, self.dim) if spanning else ([], [])
            current = [list(r) for r in red]
            if not current:
                return dims
            if len(current) == dims[-1]:
                raise NotNilpotentError("lower central series does not terminate")
            dims.append(len(current))
        raise NotNilpotentError("lower central series does not terminate")

    def step(self) -> int:
        return len(self.lower_central_series())


@lru_cache(maxsize=None)
def dynkin_words(step: int) -> tuple[tuple[Fraction, str], ...]:
    """Coefficients of right-nested brackets in Dynkin's BCH series, words up to length `step`."""
    acc: dict[str, Fraction] = {}

    def pairs(total_left: int):
        for r in range(total_left + 1):
            for s in range(total_left + 1 - r):
                if r + s:
                    yield r, s

    def walk(seq, used):
        if seq:
            n = len(seq)
            m = sum(r + s for r, s in seq)
            word = "".join("X" * r + "Y" * s for r, s in seq)
            if len(word) == 1 or word[-1] != word[-2]:
                denom = n * m
                for r, s in seq:
                    denom *= math.factorial(r) * math.factorial(s)
                coef = Fraction((-1) ** (n - 1), denom)
                acc[word] = acc.get(word, Fraction(0)) + coef
        for r, s in pairs(step - used):
            walk(seq + [(r, s)], used + r + s)

    walk([], 0)
    return tuple((c, w) for w, c in sorted(acc.items(), key=lambda t: (len(t[0]), t[0])) if c != 0)


def bch(u: Sequence, v: Sequence, algebra: LieAlgebra, step: int | None = None) -> list:
    """log(exp(u) exp(v)) in the nilpotent algebra, truncated at its step."""
    if step is None:
        step = algebra.step()
    if step > 6:
        raise ValueError("BCH series supported up to step 6")
    cache: dict[str, list] = {"X": list(u), "Y": list(v)}

    def nested(word: str) -> list:
        if word not in cache:
            cache[word] = algebra.bracket(cache[word[0]], nested(word[1:]))
        return cache[word]

    out: list = [0] * algebra.dim
    for coef, word in dynkin_words(step):
        w = nested(word)
        out = [a + coef * b for a, b in zip(out, w)]
    return out


def bch_multiply(g: Sequence, h: Sequence, algebra: LieAlgebra) -> Element:
    if len(g) != algebra.dim or len(h) != algebra.dim:
        raise ValueError("dimension mismatch")
    return tuple(canon(Fraction(x)) for x in bch(g, h, algebra))


def _xy_symbols(d: int):
    return [f"x{i + 1}" for i in range(d)] + [f"y{i + 1}" for i in range(d)]


class GradedGroup:
    """Unipotent polynomial group law on R^d with positive integer degrees."""

    def __init__(self, degrees: Sequence[int], corrections: Sequence[Poly], provenance: str = "explicit",
                 algebra: LieAlgebra | None = None, name: str = ""):
        self.degrees = tuple(int(m) for m in degrees)
        self.dim = len(self.degrees)
        if any(m <= 0 for m in self.degrees):
            raise ValueError("degrees must be positive integers")
        if len(corrections) != self.dim:
            raise ValueError("one correction polynomial per coordinate expected")
        if provenance not in ("explicit", "bch"):
            raise ValueError(f"unknown provenance {provenance!r}")
        self.corrections = tuple(Poly.lift(p) for p in corrections)
        self.provenance = provenance
        self.algebra = algebra
        self.name = name
        syms = _xy_symbols(self.dim)
        index = {s: k for k, s in enumerate(syms)}
        self._terms = []
        for i, p in enumerate(self.corrections):
            unknown = p.symbols() - set(syms)
            if unknown:
                raise ValueError(f"coordinate {i + 1}: unbound symbols {sorted(unknown)}")
            self._terms.append(tuple((c, tuple((index[s], e) for s, e in m)) for m, c in p.sorted_terms()))
        # integer form of each correction: (common denominator, [(numerator, monomial)])
        self._int_terms = []
        for terms in self._terms:
            den = math.lcm(*(Fraction(c).denominator for c, _ in terms)) if terms else 1
            self._int_terms.append((den, tuple((int(Fraction(c) * den), mono) for c, mono in terms)))
        self.order = sorted(range(self.dim), key=lambda i: (self.degrees[i], i))
        self.identity = (0,) * self.dim

    def __repr__(self):
        return f"GradedGroup({self.name or self.dim}, degrees={self.degrees}, {self.provenance})"

    def triangular_violations(self) -> list[tuple[int, str]]:
        """(coordinate, symbol) pairs where p_i uses a coordinate of degree >= mu_i."""
        bad = []
        for i, p in enumerate(self.corrections):
            for s in sorted(p.symbols()):
                j = int(s[1:]) - 1
                if self.degrees[j] >= self.degrees[i]:
                    bad.append((i, s))
        return bad

    @property
    def homogeneous_dimension(self) -> int:
        return sum(self.degrees)

    def _correction(self, i: int, v: Sequence):
        if all(type(x) is int for x in v):
            den, terms = self._int_terms[i]
            s = 0
            for c, mono in terms:
                for idx, e in mono:
                    c = c * v[idx] if e == 1 else c * v[idx] ** e
                s += c
            return s // den if s % den == 0 else Fraction(s, den)
        s = 0
        for c, mono in self._terms[i]:
            t = c
            for idx, e in mono:
                t = t * v[idx] if e == 1 else t * v[idx] ** e
            s += t
        return s

    def multiply(self, g: Sequence, h: Sequence) -> Element:
        if len(g) != self.dim or len(h) != self.dim:
            raise ValueError("dimension mismatch")
        v = tuple(g) + tuple(h)
        return tuple(canon(g[i] + h[i] + self._correction(i, v)) if self._terms[i] else canon(g[i] + h[i])
                     for i in range(self.dim))

    def inverse(self, g: Sequence) -> Element:
        if len(g) != self.dim:
            raise ValueError("dimension mismatch")
        if self.provenance == "bch":
            return tuple(canon(-x) for x in g)
        x = [0] * self.dim
        for i in self.order:
            v = tuple(g) + tuple(x)
            x[i] = canon(-g[i] - self._correction(i, v)) if self._terms[i] else canon(-g[i])
        return tuple(x)

    def conj_left(self, x: Sequence, g: Sequence) -> Element:
        """x^-1 * g."""
        return self.multiply(self.inverse(x), g)

    def dilate(self, g: Sequence, lam) -> Element:
        lam = Fraction(lam)
        if lam <= 0:
            raise ValueError("dilation parameter must be positive")
        return tuple(canon(lam ** m * x) for m, x in zip(self.degrees, g))

    def power(self, g: Sequence, n: int) -> Element:
        out = self.identity
        base = tuple(g) if n >= 0 else self.inverse(g)
        for _ in range(abs(n)):
            out = self.multiply(out, base)
        return out


def multiply(g, h, group: GradedGroup) -> Element:
    return group.multiply(g, h)


def inverse(g, group: GradedGroup) -> Element:
    return group.inverse(g)


def dilate(g, lam, group: GradedGroup) -> Element:
    return group.dilate(g, lam)


def bch_group(algebra: LieAlgebra, degrees: Sequence[int], name: str = "") -> GradedGroup:
    """Group law on the algebra's coordinates via the truncated BCH series."""
    d = algebra.dim
    step = algebra.step()
    xs = [Poly.var(f"x{i + 1}") for i in range(d)]
    ys = [Poly.var(f"y{i + 1}") for i in range(d)]
    z = bch(xs, ys, algebra, step)
    corrections = [Poly.lift(z[i]) - xs[i] - ys[i] for i in range(d)]
    return GradedGroup(degrees, corrections, provenance="bch", algebra=algebra, name=name or algebra.name)


@dataclass
class ValidationReport:
    ok: bool = True
    samples: int = 0
    seed: int = 0
    failures: list = field(default_factory=list)

    def fail(self, check: str, witness) -> None:
        self.ok = False
        self.failures.append((check, witness))

    def as_dict(self) -> dict:
        return {"ok": self.ok, "samples": self.samples, "seed": self.seed,
                "failures": [{"check": c, "witness": [list(map(str, w)) if isinstance(w, tuple) else str(w)
                                                       for w in wit]} for c, wit in self.failures]}


def random_rational(rng: random.Random, size: int = 12, den: int = 6) -> Fraction:
    return canon(Fraction(rng.randint(-size, size), rng.randint(1, den)))


def random_element(group: GradedGroup, rng: random.Random) -> Element:
    return tuple(random_rational(rng) for _ in range(group.dim))


def validate_group(group: GradedGroup, samples: int = 40, seed: int = 0) -> ValidationReport:
    """Seeded exact checks of the group axioms and the dilation automorphisms.

    Any failure carries an exact counterexample.  A pass means no counterexample
    turned up among the random rational samples.
    """
    report = ValidationReport(samples=samples, seed=seed)
    rng = random.Random(seed)
    for i, s in group.triangular_violations():
        report.fail("triangularity", (i + 1, s))
    tri_ok = report.ok
    e = group.identity
    for _ in range(samples):
        g, h, k = (random_element(group, rng) for _ in range(3))
        if group.multiply(g, e) != tuple(g) or group.multiply(e, g) != tuple(g):
            report.fail("identity", (g,))
        if group.multiply(group.multiply(g, h), k) != group.multiply(g, group.multiply(h, k)):
            report.fail("associativity", (g, h, k))
        if tri_ok:
            gi = group.inverse(g)
            if group.multiply(g, gi) != e or group.multiply(gi, g) != e:
                report.fail("inverse", (g,))
        lam = Fraction(rng.randint(1, 9), rng.randint(1, 5))
        sig = Fraction(rng.randint(1, 9), rng.randint(1, 5))
        if group.dilate(group.multiply(g, h), lam) != group.multiply(group.dilate(g, lam), group.dilate(h, lam)):
            report.fail("automorphism", (g, h, lam))
        if group.dilate(group.dilate(g, lam), sig) != group.dilate(g, lam * sig):
            report.fail("one-parameter", (g, lam, sig))
        if len(report.failures) > 20:
            break
    return report


# Standard algebras and laws --------------------------------------------------

def heisenberg_algebra() -> LieAlgebra:
    return LieAlgebra(3, {(0, 1): {2: 1}}, name="heisenberg")


def gmu_algebra(mu) -> LieAlgebra:
    mu = Fraction(mu) if not isinstance(mu, Poly) else mu
    return LieAlgebra(7, {
        (0, 1): {3: 1}, (0, 2): {5: -1}, (0, 4): {6: -1},
        (1, 2): {4: 1}, (1, 5): {6: mu}, (2, 3): {6: 1 - mu},
    }, name="147E")


def algebra_257g() -> LieAlgebra:
    return LieAlgebra(7, {
        (0, 1): {2: 1}, (0, 2): {5: 1}, (0, 4): {6: 1}, (1, 3): {6: 1}, (3, 4): {5: 1},
    }, name="257G")


def abelian_group(d: int, degrees: Sequence[int] | None = None) -> GradedGroup:
    return GradedGroup(degrees or (1,) * d, [Poly()] * d, name="abelian")


def heisenberg_group() -> GradedGroup:
    x1, x2, y1, y2 = (Poly.var(s) for s in ("x1", "x2", "y1", "y2"))
    half = Fraction(1, 2)
    return GradedGroup((1, 1, 2), [Poly(), Poly(), half * (x1 * y2 - x2 * y1)], name="heisenberg")


def gmu_corrections(mu, completed: bool = True) -> list[Poly]:
    """Correction polynomials of the 3-step family; ``mu`` may be a number or a Poly.

    The quadratic top-degree term alone is not associative (try x = X1, y = X3,
    z = X2).  ``completed=True`` adds the degree-3 terms that restore
    associativity while keeping Z x 2qZ x 2qZ x Z^4 closed under the law;
    ``completed=False`` returns the quadratic law as written.
    """
    if not isinstance(mu, Poly):
        mu = Fraction(mu)
    v = {s: Poly.var(s) for s in _xy_symbols(7)}
    half, quarter = Fraction(1, 2), Fraction(1, 4)
    p4 = half * (v["x1"] * v["y2"] - v["x2"] * v["y1"])
    p5 = half * (v["x2"] * v["y3"] - v["x3"] * v["y2"])
    p6 = -half * (v["x1"] * v["y3"] - v["x3"] * v["y1"])
    p7 = mu / 2 * (v["x2"] * v["y6"] - v["x6"] * v["y2"]) + (1 - mu) / 2 * (v["x3"] * v["y4"] - v["x4"] * v["y3"])
    if completed:
        p7 = p7 + (
            -half * v["x1"] * v["x2"] * v["y3"]
            + quarter * v["x1"] * v["x3"] * v["y2"]
            + (mu - 1) / 4 * v["x1"] * v["y2"] * v["y3"]
            + (mu - 1) / 4 * v["x2"] * v["x3"] * v["y1"]
            - quarter * v["x2"] * v["y1"] * v["y3"]
            - v["x1"] * v["y5"]
        )
    return [Poly(), Poly(), Poly(), p4, p5, p6, p7]


def gmu_group(mu, completed: bool = True) -> GradedGroup:
    """The 3-step family on R^7 in its cocycle-tower coordinates (see ``gmu_corrections``)."""
    mu = Fraction(mu)
    tag = "" if completed else ", quadratic"
    return GradedGroup((1, 1, 1, 2, 2, 2, 3), gmu_corrections(mu, completed), name=f"gmu({mu}{tag})")


def gmu_bch_group(mu) -> GradedGroup:
    return bch_group(gmu_algebra(mu), (1, 1, 1, 2, 2, 2, 3), name=f"gmu-bch({Fraction(mu)})")
