"""Dilation data on box-adapted lattices.

The lattice is a coordinate-wise scaled integer grid ``s_1 Z x ... x s_d Z``,
the fundamental domain a half-open coordinate box ``[lo_i, hi_i)``, and the
stretch ``lam`` acts through the group's dilations.  All membership tests are
exact rational comparisons.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import groupby, product
from math import ceil, floor, isqrt, lcm
from typing import Iterable, Sequence

from .group import GradedGroup, validate_group
from .poly import canon


class DatumError(ValueError):
    """A dilation datum failed validation; ``failures`` holds exact witnesses."""

    def __init__(self, failures):
        self.failures = failures
        super().__init__("; ".join(f"{name}: {wit}" for name, wit in failures[:5]))


class QuasiNorm:
    """Homogeneous gauge with exact power: ``power(g) = |g| ** exponent``.

    ``sup``: max_i |g_i|^(1/mu_i).  ``koranyi``: ((x^2 + y^2)^2 + z^2)^(1/4) on
    degrees (1, 1, 2).
    """

    def __init__(self, kind: str, degrees: Sequence[int]):
        self.kind = kind
        self.degrees = tuple(degrees)
        if kind == "sup":
            self.exponent = lcm(*self.degrees)
        elif kind == "koranyi":
            if self.degrees != (1, 1, 2):
                raise ValueError("the Koranyi gauge needs degrees (1, 1, 2)")
            self.exponent = 4
        else:
            raise ValueError(f"unknown quasinorm {kind!r}")

    def __repr__(self):
        return f"QuasiNorm({self.kind})"

    def power(self, g: Sequence) -> Fraction:
        if self.kind == "koranyi":
            x, y, z = g
            return canon(Fraction((x * x + y * y) ** 2 + z * z))
        p = self.exponent
        return canon(max((Fraction(abs(x)) ** (p // m) for x, m in zip(g, self.degrees)), default=Fraction(0)))

    def lt(self, g: Sequence, r) -> bool:
        return self.power(g) < Fraction(r) ** self.exponent

    def le(self, g: Sequence, r) -> bool:
        return self.power(g) <= Fraction(r) ** self.exponent

    def top_square_bound(self, lower: Sequence, r, top: int) -> Fraction:
        """Q such that g (lower coordinates fixed, top coordinate z) lies in the
        open r-ball iff z^2 < Q.  Q <= 0 means the fiber misses the ball."""
        r = Fraction(r)
        if self.kind == "koranyi":
            x, y = lower
            return r ** 4 - (x * x + y * y) ** 2
        for x, m in zip(lower, self.degrees[:top] + self.degrees[top + 1:]):
            if not Fraction(abs(x)) ** (self.exponent // m) < r ** self.exponent:
                return Fraction(0)
        return r ** (2 * self.degrees[top])


@dataclass(frozen=True)
class Radii:
    """Inner/outer radii of the box, stored as exact powers r**exponent.

    inner: largest r with the open ball B(e, r) inside V.
    outer: sup of |v| over v in V.
    """

    exponent: int
    inner_power: Fraction
    outer_power: Fraction

    def inner_at_least(self, r) -> bool:
        return Fraction(r) ** self.exponent <= self.inner_power

    def outer_at_most(self, r) -> bool:
        return self.outer_power <= Fraction(r) ** self.exponent

    def sufficient(self, lam) -> bool:
        """lam > 1 + r_+/r_-, i.e. ((lam - 1) r_-)^p > r_+^p."""
        lam = Fraction(lam)
        return lam > 1 and (lam - 1) ** self.exponent * self.inner_power > self.outer_power

    @property
    def approx(self) -> tuple[float, float]:
        p = self.exponent
        return float(self.inner_power) ** (1 / p), float(self.outer_power) ** (1 / p)


class DilationDatum:
    def __init__(self, group: GradedGroup, scales: Sequence, box: Sequence[tuple], stretch, norm: str = "sup",
                 name: str = "", samples: int = 30, seed: int = 0):
        self.group = group
        self.dim = group.dim
        self.name = name
        self.scales = tuple(canon(Fraction(s)) for s in scales)
        self.lo = tuple(canon(Fraction(a)) for a, _ in box)
        self.hi = tuple(canon(Fraction(b)) for _, b in box)
        self.stretch = canon(Fraction(stretch))
        self.norm = QuasiNorm(norm, group.degrees)
        self.lam_pow = tuple(canon(Fraction(self.stretch) ** m) for m in group.degrees)
        self.levels = [list(idx) for _, idx in groupby(group.order, key=lambda i: group.degrees[i])]
        failures = self._structural_failures()
        if not failures:
            failures = self._sampled_failures(samples, seed)
        if failures:
            raise DatumError(failures)

    def __repr__(self):
        return f"DilationDatum({self.name or self.group.name}, lam={self.stretch}, norm={self.norm.kind})"

    @property
    def identity(self):
        return self.group.identity

    def _structural_failures(self) -> list:
        bad = []
        if len(self.scales) != self.dim or len(self.lo) != self.dim:
            return [("shape", (len(self.scales), len(self.lo), self.dim))]
        for i in range(self.dim):
            if self.scales[i] <= 0:
                bad.append(("scale", (i + 1, self.scales[i])))
            if not self.lo[i] < self.hi[i]:
                bad.append(("degenerate box", (i + 1, self.lo[i], self.hi[i])))
            elif not self.lo[i] < 0 < self.hi[i]:
                bad.append(("identity not interior", (i + 1, self.lo[i], self.hi[i])))
            if self.hi[i] - self.lo[i] != self.scales[i]:
                bad.append(("box width differs from lattice scale", (i + 1, self.hi[i] - self.lo[i], self.scales[i])))
            if Fraction(self.lam_pow[i]).denominator != 1:
                bad.append(("stretch does not preserve the lattice", (i + 1, self.lam_pow[i])))
        for i, s in self.group.triangular_violations():
            bad.append(("triangularity", (i + 1, s)))
        if not Fraction(self.stretch) > 1:
            bad.append(("stretch", (self.stretch,)))
        elif not bad and not radii_of_box(self).sufficient(self.stretch):
            bad.append(("stretch not sufficiently large", (self.stretch, radii_of_box(self).approx)))
        return bad

    def _sampled_failures(self, samples: int, seed: int) -> list:
        bad = list(validate_group(self.group, samples=max(1, samples // 3), seed=seed).failures)
        rng = random.Random(seed)
        G = self.group
        for _ in range(samples):
            a = random_lattice_point(self, rng)
            b = random_lattice_point(self, rng)
            ab = G.multiply(a, b)
            if not self.in_lattice(ab):
                bad.append(("lattice not closed under products", (a, b)))
            if not self.in_lattice(G.inverse(a)):
                bad.append(("lattice not closed under inverses", (a,)))
            v = random_box_point(self, rng)
            g = G.multiply(a, v)
            if locate(g, self) != (a, v):
                bad.append(("locate round trip", (a, v)))
            if len(bad) > 10:
                break
        return bad

    def in_lattice(self, g: Sequence) -> bool:
        return all((Fraction(x) / s).denominator == 1 for x, s in zip(g, self.scales))

    def in_box(self, g: Sequence, n: int = 0) -> bool:
        """g in D^n(V)."""
        for x, a, b, lp in zip(g, self.lo, self.hi, self.lam_pow):
            f = lp ** n
            if not a * f <= x < b * f:
                return False
        return True

    def dilate(self, g: Sequence, n: int = 1) -> tuple:
        """D^n(g) for integer n (negative n contracts)."""
        if n >= 0:
            return tuple(canon(x * lp ** n) for x, lp in zip(g, self.lam_pow))
        return tuple(canon(Fraction(x) / Fraction(lp) ** (-n)) for x, lp in zip(g, self.lam_pow))

    def inside_dilated_lattice(self, g: Sequence, n: int) -> bool:
        """g in D^n(Gamma)."""
        return all((Fraction(x) / (s * lp ** n)).denominator == 1
                   for x, s, lp in zip(g, self.scales, self.lam_pow))


def random_lattice_point(datum: DilationDatum, rng: random.Random, size: int = 6) -> tuple:
    return tuple(canon(rng.randint(-size, size) * s) for s in datum.scales)


def random_box_point(datum: DilationDatum, rng: random.Random) -> tuple:
    out = []
    for a, b in zip(datum.lo, datum.hi):
        t = Fraction(rng.randrange(0, 24), 24)
        out.append(canon(a + (b - a) * t))
    return tuple(out)


def locate(g: Sequence, datum: DilationDatum) -> tuple[tuple, tuple]:
    """The unique (gamma, v) in Gamma x V with g = gamma * v.

    Coordinates are fixed level by level in increasing degree: at coordinate i
    the residue (gamma^-1 * g)_i equals g_i - gamma_i plus terms in lower
    degrees, so gamma_i is the multiple of s_i that brings it into [lo_i, hi_i).
    """
    G = datum.group
    gamma = [0] * datum.dim
    for level in datum.levels:
        r = G.multiply(G.inverse(tuple(gamma)), g)
        for i in level:
            m = floor(Fraction(r[i] - datum.lo[i]) / datum.scales[i])
            gamma[i] = canon(m * datum.scales[i])
    gamma_t = tuple(gamma)
    return gamma_t, G.multiply(G.inverse(gamma_t), g)


def _axis_values(lo, hi, scale) -> range:
    first = ceil(Fraction(lo) / scale)
    last = ceil(Fraction(hi) / scale)
    return range(first, last)


def dilated_box_axes(datum: DilationDatum, n: int) -> list[list]:
    axes = []
    for a, b, s, lp in zip(datum.lo, datum.hi, datum.scales, datum.lam_pow):
        f = lp ** n
        axes.append([canon(k * s) for k in _axis_values(a * f, b * f, s)])
    return axes


def enumerate_dilated_box(datum: DilationDatum, n: int = 1) -> list[tuple]:
    """D^n(V) intersected with the lattice, in coordinate-lexicographic order."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return list(product(*dilated_box_axes(datum, n)))


def count_dilated_box(datum: DilationDatum, n: int = 1) -> int:
    out = 1
    for axis in dilated_box_axes_lengths(datum, n):
        out *= axis
    return out


def dilated_box_axes_lengths(datum: DilationDatum, n: int) -> list[int]:
    return [len(_axis_values(a * lp ** n, b * lp ** n, s))
            for a, b, s, lp in zip(datum.lo, datum.hi, datum.scales, datum.lam_pow)]


def qnorm_lt(g: Sequence, r, datum: DilationDatum) -> bool:
    if Fraction(r) <= 0:
        raise ValueError("radius must be positive")
    return datum.norm.lt(g, r)


def _ball_axes(datum: DilationDatum, r, closed: bool) -> list[range]:
    axes = []
    r = Fraction(r)
    for m, s in zip(datum.group.degrees, datum.scales):
        bound = r ** m / s
        kmax = floor(bound) if closed else ceil(bound) - 1
        axes.append(range(-kmax, kmax + 1))
    return axes


def ball_lattice_points(center: Sequence, r, datum: DilationDatum, closed: bool = False) -> set[tuple]:
    """Lattice points gamma with |center^-1 * gamma| < r (<= r when closed)."""
    if Fraction(r) <= 0:
        raise ValueError("radius must be positive")
    test = datum.norm.le if closed else datum.norm.lt
    G = datum.group
    center = tuple(center)
    out = set()
    for ks in product(*_ball_axes(datum, r, closed)):
        g = tuple(canon(k * s) for k, s in zip(ks, datum.scales))
        if test(g, r):
            out.add(G.multiply(center, g) if any(center) else g)
    return out


def count_ball_points(r, datum: DilationDatum) -> int:
    """|B(e, r) cap Gamma| counting the single top-degree coordinate fiberwise."""
    top = max(range(datum.dim), key=lambda i: (datum.group.degrees[i], i))
    if sum(1 for m in datum.group.degrees if m == datum.group.degrees[top]) != 1:
        return len(ball_lattice_points(datum.identity, r, datum))
    axes = _ball_axes(datum, r, closed=False)
    lower_idx = [i for i in range(datum.dim) if i != top]
    s = datum.scales[top]
    total = 0
    for ks in product(*(axes[i] for i in lower_idx)):
        lower = [canon(k * datum.scales[i]) for k, i in zip(ks, lower_idx)]
        q = datum.norm.top_square_bound(lower, r, top)
        if q <= 0:
            continue
        t = Fraction(q) / (s * s)
        m = isqrt(ceil(t) - 1)
        total += 2 * m + 1
    return total


def radii_of_box(datum: DilationDatum) -> Radii:
    p = datum.norm.exponent
    near = [min(-a, b) for a, b in zip(datum.lo, datum.hi)]
    far = [max(-a, b) for a, b in zip(datum.lo, datum.hi)]
    if any(x <= 0 for x in near):
        raise ValueError("degenerate box")
    if datum.norm.kind == "koranyi":
        inner = min(Fraction(near[0]) ** 4, Fraction(near[1]) ** 4, Fraction(near[2]) ** 2)
        outer = datum.norm.power(far)
    else:
        degs = datum.group.degrees
        inner = min(Fraction(x) ** (p // m) for x, m in zip(near, degs))
        outer = max(Fraction(x) ** (p // m) for x, m in zip(far, degs))
    return Radii(p, canon(inner), canon(outer))


def growth_constants(lam, r_minus, r_plus) -> tuple[Fraction, Fraction]:
    """(C_-, C_+) of the support growth bounds for rational radii bounds."""
    lam, r_minus, r_plus = Fraction(lam), Fraction(r_minus), Fraction(r_plus)
    c_minus = (lam - (1 + r_plus / r_minus)) * r_minus / lam
    c_plus = lam * r_minus * (1 + lam / (lam - 1))
    return c_minus, c_plus


@dataclass(frozen=True)
class Splitting:
    """Horizontal/vertical split with the top-degree coordinates as vertical block."""

    horizontal: tuple[int, ...]
    vertical: tuple[int, ...]
    f_h: tuple[tuple, ...]
    f_v: tuple[tuple, ...]
    lam_v: int

    def join(self, h: Sequence, v: Sequence) -> tuple:
        out = [0] * (len(self.horizontal) + len(self.vertical))
        for i, x in zip(self.horizontal, h):
            out[i] = x
        for i, x in zip(self.vertical, v):
            out[i] = x
        return tuple(out)

    def split(self, g: Sequence) -> tuple[tuple, tuple]:
        return tuple(g[i] for i in self.horizontal), tuple(g[i] for i in self.vertical)


def splitting(datum: DilationDatum) -> Splitting:
    degs = datum.group.degrees
    rho = max(degs)
    vertical = tuple(i for i in range(datum.dim) if degs[i] == rho)
    horizontal = tuple(i for i in range(datum.dim) if degs[i] != rho)
    if not horizontal:
        raise ValueError("no horizontal block: the group has a single degree")
    central = all(not ({f"x{j + 1}", f"y{j + 1}"} & p.symbols())
                  for p in datum.group.corrections for j in vertical)
    if not central:
        raise ValueError("top-degree coordinates are not central")
    axes = dilated_box_axes(datum, 1)
    f_h = tuple(product(*(axes[i] for i in horizontal)))
    f_v = tuple(product(*(axes[i] for i in vertical)))
    return Splitting(horizontal, vertical, f_h, f_v, int(datum.stretch ** rho))


def intersection_property(split: Splitting) -> tuple[bool, tuple | None]:
    """Brute-force intersection of the translates x + F_V over x in F_V."""
    fv = split.f_v
    common = set(fv)
    for x in fv:
        shifted = {tuple(canon(a + b) for a, b in zip(x, y)) for y in fv}
        common &= shifted
        if not common:
            return False, None
    witness = min(common, key=lambda w: (sum(abs(c) for c in w), w))
    return True, witness


def lattice_sample(datum: DilationDatum, count: int, seed: int = 0, size: int = 6) -> list[tuple]:
    rng = random.Random(seed)
    return [random_lattice_point(datum, rng, size) for _ in range(count)]


def sort_points(points: Iterable[Sequence]) -> list[tuple]:
    return sorted(tuple(p) for p in points)
