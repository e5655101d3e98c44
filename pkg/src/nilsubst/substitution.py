"""Symbolic substitutions over a dilation datum.

A substitution datum assigns to every letter a patch on D(V) cap Gamma.  The
substitution map sends a patch P on M to the patch on D(MV) cap Gamma whose
letter at D(eta) * zeta is S0(P(eta))(zeta).  Two independent evaluations are
provided: per-cell stamping (fast path) and per-point localisation.
"""

from __future__ import annotations

import os
import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import ceil, floor
from typing import Iterable, Mapping, Sequence

from .lattice import DilationDatum, Splitting, enumerate_dilated_box, intersection_property, locate, splitting
from .poly import canon

BUDGET_ENV = "NILSUBST_POINT_BUDGET"
DEFAULT_BUDGET = 5_000_000


class BudgetError(RuntimeError):
    pass


class SubstitutionError(ValueError):
    pass


def point_budget(budget: int | None = None) -> int:
    if budget is not None:
        return budget
    return int(os.environ.get(BUDGET_ENV, DEFAULT_BUDGET))


class Patch:
    """Finite map from lattice points to letters; iteration is coordinate-lexicographic."""

    __slots__ = ("_map", "_sorted")

    def __init__(self, mapping: Mapping[tuple, str] | Iterable[tuple[tuple, str]] = ()):
        self._map = dict(mapping)
        self._sorted = None

    def __len__(self):
        return len(self._map)

    def __contains__(self, x):
        return x in self._map

    def __getitem__(self, x) -> str:
        return self._map[x]

    def get(self, x, default=None):
        return self._map.get(x, default)

    def __eq__(self, other):
        return isinstance(other, Patch) and self._map == other._map

    def __hash__(self):
        return hash(frozenset(self._map.items()))

    def __repr__(self):
        return f"Patch({len(self._map)} points)"

    def support(self) -> list[tuple]:
        if self._sorted is None:
            self._sorted = sorted(self._map)
        return self._sorted

    def support_set(self) -> set:
        return set(self._map)

    def items(self):
        return [(x, self._map[x]) for x in self.support()]

    def as_dict(self) -> dict:
        return dict(self._map)

    def restrict(self, points: Iterable) -> "Patch":
        return Patch({x: self._map[x] for x in points if x in self._map})

    def translate(self, gamma: Sequence, datum: DilationDatum) -> "Patch":
        """gamma . P: support gamma * supp(P), letters carried along."""
        G = datum.group
        gamma = tuple(gamma)
        return Patch({G.multiply(gamma, x): a for x, a in self._map.items()})

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for a in self._map.values():
            out[a] = out.get(a, 0) + 1
        return out


def single(letter: str, datum: DilationDatum) -> Patch:
    return Patch({datum.identity: letter})


class SubstitutionDatum:
    """Alphabet, stretch (shared with the dilation datum) and the letter table."""

    def __init__(self, datum: DilationDatum, alphabet: Sequence[str], table: Mapping[str, Mapping[tuple, str]],
                 construction: dict | None = None):
        self.datum = datum
        self.alphabet = tuple(alphabet)
        if len(set(self.alphabet)) != len(self.alphabet) or not self.alphabet:
            raise SubstitutionError("alphabet must be non-empty with distinct letters")
        self.base = enumerate_dilated_box(datum, 1)
        self.base_index = {z: i for i, z in enumerate(self.base)}
        self.rows: dict[str, tuple[str, ...]] = {}
        for a in self.alphabet:
            if a not in table:
                raise SubstitutionError(f"no rule for letter {a!r}")
            rule = dict(table[a].items() if isinstance(table[a], Patch) else table[a])
            if set(rule) != set(self.base):
                raise SubstitutionError(f"rule for {a!r} is not supported on D(V) cap Gamma")
            bad = {x for x in rule.values() if x not in self.alphabet}
            if bad:
                raise SubstitutionError(f"rule for {a!r} uses unknown letters {sorted(bad)}")
            self.rows[a] = tuple(rule[z] for z in self.base)
        extra = set(table) - set(self.alphabet)
        if extra:
            raise SubstitutionError(f"rules for letters outside the alphabet: {sorted(extra)}")
        self.construction = construction or {}

    @property
    def stretch(self):
        return self.datum.stretch

    def rule(self, a: str) -> Patch:
        return Patch(zip(self.base, self.rows[a]))

    def letter_at(self, a: str, zeta: tuple) -> str:
        return self.rows[a][self.base_index[zeta]]

    def __eq__(self, other):
        return (isinstance(other, SubstitutionDatum) and self.alphabet == other.alphabet
                and self.rows == other.rows and self.base == other.base)


# Substitution map -------------------------------------------------------------

def _stamp(cells: Iterable[tuple[tuple, str]], S: SubstitutionDatum) -> dict:
    datum = S.datum
    G = datum.group
    base = S.base
    out: dict = {}
    for eta, c in cells:
        row = S.rows[c]
        if not any(eta):
            out.update(zip(base, row))
            continue
        d_eta = datum.dilate(eta)
        for zeta, letter in zip(base, row):
            out[G.multiply(d_eta, zeta)] = letter
    return out


def substitute(P: Patch, S: SubstitutionDatum, jobs: int = 1) -> Patch:
    """Per-cell stamping: the image of the cell at eta is D(eta) * S0(P(eta)).

    Images of distinct cells are disjoint, so with ``jobs > 1`` the cells are
    split across worker processes and the partial maps merged.
    """
    cells = list(P._map.items())
    if jobs <= 1 or len(cells) < 2 * jobs:
        return Patch(_stamp(cells, S))
    from concurrent.futures import ProcessPoolExecutor
    chunks = [cells[i::jobs] for i in range(jobs)]
    out: dict = {}
    with ProcessPoolExecutor(jobs) as pool:
        for part in pool.map(_stamp, chunks, [S] * jobs):
            out.update(part)
    return Patch(out)


def _interval_mul(a: tuple, b: tuple) -> tuple:
    prods = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
    return min(prods), max(prods)


def _image_bounds(g: tuple, datum: DilationDatum) -> list[tuple]:
    """Coordinate-wise enclosure of g * D(closure V) by interval arithmetic."""
    G = datum.group
    d = datum.dim
    box = [(Fraction(a * lp), Fraction(b * lp)) for a, b, lp in zip(datum.lo, datum.hi, datum.lam_pow)]
    variables = [(Fraction(x), Fraction(x)) for x in g] + box
    out = []
    for i in range(d):
        lo, hi = Fraction(g[i]) + box[i][0], Fraction(g[i]) + box[i][1]
        for c, mono in G._terms[i]:
            iv = (Fraction(c), Fraction(c))
            for idx, e in mono:
                for _ in range(e):
                    iv = _interval_mul(iv, variables[idx])
            lo, hi = lo + iv[0], hi + iv[1]
        out.append((lo, hi))
    return out


def substitute_pointwise(P: Patch, S: SubstitutionDatum) -> Patch:
    """Independent evaluation: scan candidate lattice points, localise D^-1(gamma).

    gamma lies in the support iff D^-1(gamma) = eta * v with eta in supp(P);
    its letter is then S0(P(eta))(D(eta)^-1 * gamma).
    """
    datum = S.datum
    G = datum.group
    candidates = set()
    for eta in P._map:
        bounds = _image_bounds(datum.dilate(eta), datum)
        axes = [[canon(k * s) for k in range(ceil(lo / s), floor(hi / s) + 1)]
                for (lo, hi), s in zip(bounds, datum.scales)]
        candidates.update(product(*axes))
    out = {}
    for gamma in candidates:
        eta, _ = locate(datum.dilate(gamma, -1), datum)
        if eta not in P._map:
            continue
        zeta = G.multiply(G.inverse(datum.dilate(eta)), gamma)
        out[gamma] = S.letter_at(P[eta], zeta)
    return Patch(out)


def iterate(a: str, n: int, S: SubstitutionDatum, budget: int | None = None, start: Patch | None = None,
            jobs: int = 1) -> Patch:
    """S^n(P_a), or S^n(start) when a starting patch is given."""
    if n < 0:
        raise ValueError("n must be non-negative")
    P = start if start is not None else single(a, S.datum)
    size = len(P) * len(S.base) ** n
    limit = point_budget(budget)
    if size > limit:
        raise BudgetError(f"S^{n} would produce {size} points, budget is {limit}")
    for _ in range(n):
        P = substitute(P, S, jobs)
    return P


def support_vn(M: Iterable[tuple], n: int, datum: DilationDatum, base: Sequence[tuple] | None = None) -> set[tuple]:
    """V(n, M) cap Gamma through V(0, M) cap Gamma = M and the stamping recursion."""
    current = {tuple(x) for x in M}
    if not current:
        raise ValueError("M must be non-empty")
    G = datum.group
    base = base if base is not None else enumerate_dilated_box(datum, 1)
    for _ in range(n):
        nxt = set()
        for eta in current:
            d_eta = datum.dilate(eta)
            nxt.update(G.multiply(d_eta, z) for z in base)
        current = nxt
    return current


# Checks -------------------------------------------------------------------------

def incidence_matrix(S: SubstitutionDatum) -> list[list[int]]:
    """M[a][b] = number of occurrences of a in S0(b)."""
    idx = {a: i for i, a in enumerate(S.alphabet)}
    n = len(S.alphabet)
    m = [[0] * n for _ in range(n)]
    for b in S.alphabet:
        for a in S.rows[b]:
            m[idx[a]][idx[b]] += 1
    return m


def is_primitive(S: SubstitutionDatum) -> int | None:
    """Least L with every entry of M^L positive, searched up to Wielandt's bound."""
    m = incidence_matrix(S)
    n = len(m)
    bound = n * n - 2 * n + 2
    power = [row[:] for row in m]
    for L in range(1, bound + 1):
        if all(x > 0 for row in power for x in row):
            return L
        power = [[sum(power[i][k] * m[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
    return None


@dataclass
class NonPeriodicityReport:
    injective: bool
    failures: list = field(default_factory=list)
    empty_windows: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.injective and not self.failures


def overlap_window(gamma: tuple, S: SubstitutionDatum) -> list[tuple]:
    """W_gamma = {zeta in D(V) cap Gamma : gamma * zeta in D(V)}."""
    G = S.datum.group
    return [z for z in S.base if G.multiply(gamma, z) in S.base_index]


def is_nonperiodic(S: SubstitutionDatum) -> NonPeriodicityReport:
    G = S.datum.group
    injective = len(set(S.rows.values())) == len(S.alphabet)
    report = NonPeriodicityReport(injective)
    for gamma in S.base:
        if not any(gamma):
            continue
        window = overlap_window(gamma, S)
        if not window:
            report.empty_windows.append(gamma)
        shifted = [S.base_index[G.multiply(gamma, z)] for z in window]
        plain = [S.base_index[z] for z in window]
        for a in S.alphabet:
            ra = S.rows[a]
            for b in S.alphabet:
                rb = S.rows[b]
                if not any(ra[i] != rb[j] for i, j in zip(shifted, plain)):
                    report.failures.append((gamma, a, b))
    return report


def is_legal(P: Patch, S: SubstitutionDatum, n_max: int, budget: int | None = None) -> tuple | None:
    """Certificate (n, a, gamma) with gamma . P a sub-patch of S^n(P_a), if found for n <= n_max."""
    if len(P) == 0:
        return (0, S.alphabet[0], S.datum.identity)
    G = S.datum.group
    anchor = P.support()[0]
    anchor_inv = G.inverse(anchor)
    rest = [(x, P[x]) for x in P.support()[1:]]
    for n in range(1, n_max + 1):
        for a in S.alphabet:
            big = iterate(a, n, S, budget)
            for x, letter in big._map.items():
                if letter != P[anchor]:
                    continue
                gamma = G.multiply(x, anchor_inv)
                if all(big.get(G.multiply(gamma, y)) == b for y, b in rest):
                    return (n, a, gamma)
    return None


# Good substitution rules ------------------------------------------------------------------

def build_good(datum: DilationDatum, alphabet: Sequence[str], fill: str = "constant", seed: int = 0,
               choices: Mapping | None = None, special: str | None = None, default: str | None = None
               ) -> SubstitutionDatum:
    """A rule satisfying the good-substitution constraints on the splitting F_H x F_V.

    Fixed cells: S0(c) is ``special`` on Xi_a = {e} x F_V  u  {g1} x (F_V - {x1})
    and avoids ``special`` on Xi_o = (F_H - {e}) x {x1}; S0(b)(g2, x_c) = c for
    c != special and S0(b)(g2, x2) = b.  Without explicit ``choices`` the points
    g1, g2, x1, x2, x_c are drawn from ``seed``.  Remaining cells follow
    ``fill``: "constant" (letter ``default``) or "random" (seeded).
    """
    alphabet = tuple(alphabet)
    if len(alphabet) < 2:
        raise SubstitutionError(f"need at least 2 letters, got {len(alphabet)}")
    if fill not in ("constant", "random"):
        raise SubstitutionError(f"unknown fill policy {fill!r}")
    split = splitting(datum)
    special = special or alphabet[0]
    default = default or special
    others = [c for c in alphabet if c != special]
    e_h = tuple(0 for _ in split.horizontal)
    if len(split.f_h) < 3:
        raise SubstitutionError(f"|F_H| = {len(split.f_h)} < 3")
    if len(split.f_v) < len(alphabet) + 1:
        raise SubstitutionError(f"|F_V| = {len(split.f_v)} < |A| + 1 = {len(alphabet) + 1}")
    holds, _ = intersection_property(split)
    if not holds:
        raise SubstitutionError("the vertical block fails the intersection property")
    rng = random.Random(seed)
    chosen = _good_choices(split, others, rng, choices)
    g1, g2, x1, x2, xc = chosen["gamma1"], chosen["gamma2"], chosen["x1"], chosen["x2"], chosen["x_c"]

    xi_a = {split.join(e_h, v) for v in split.f_v} | {split.join(g1, v) for v in split.f_v if v != x1}
    xi_o = {split.join(h, x1) for h in split.f_h if h != e_h}
    table = {}
    for b in alphabet:
        rule = {}
        for p in xi_a:
            rule[p] = special
        for p in sorted(xi_o):
            rule[p] = others[0] if fill == "constant" else rng.choice(others)
        for c in others:
            rule[split.join(g2, xc[c])] = c
        rule[split.join(g2, x2)] = b
        for p in enumerate_dilated_box(datum, 1):
            if p not in rule:
                rule[p] = default if fill == "constant" else rng.choice(alphabet)
        table[b] = rule
    construction = dict(chosen, special=special, xi_a=sorted(xi_a), xi_o=sorted(xi_o), fill=fill, seed=seed)
    return SubstitutionDatum(datum, alphabet, table, construction)


def _good_choices(split: Splitting, others: Sequence[str], rng: random.Random, choices: Mapping | None) -> dict:
    e_h = tuple(0 for _ in split.horizontal)
    fh = [h for h in split.f_h if h != e_h]
    fv = list(split.f_v)
    common = set(fv)
    for x in fv:
        common &= {tuple(canon(a + b) for a, b in zip(x, y)) for y in fv}
    if choices is not None:
        out = {"gamma1": tuple(choices["gamma1"]), "gamma2": tuple(choices["gamma2"]),
               "x1": tuple(choices["x1"]), "x2": tuple(choices["x2"]),
               "x_c": {c: tuple(v) for c, v in choices["x_c"].items()}}
        problems = []
        if out["gamma1"] == out["gamma2"] or out["gamma1"] not in fh or out["gamma2"] not in fh:
            problems.append("gamma1, gamma2 must be distinct points of F_H - {e}")
        if out["x1"] not in common:
            problems.append("x1 must lie in every translate x + F_V")
        used = [out["x1"], out["x2"]] + [out["x_c"].get(c) for c in others]
        if len(set(used)) != len(used) or any(v not in fv for v in used):
            problems.append("x1, x2 and the x_c must be distinct points of F_V")
        if problems:
            raise SubstitutionError("; ".join(problems))
        return out
    g1, g2 = rng.sample(fh, 2)
    x1 = rng.choice(sorted(common))
    rest = rng.sample([v for v in fv if v != x1], 1 + len(others))
    return {"gamma1": g1, "gamma2": g2, "x1": x1, "x2": rest[0], "x_c": dict(zip(others, rest[1:]))}


# Fixpoints -----------------------------------------------------------------------------

class Fixpoint:
    """Lazy S^k-fixpoint grown from the letter cycle at the identity.

    ``depth(g)`` is the least n with g in V(n) cap Gamma; the letter at g is
    read off S^m(P_c) for any m >= depth(g) that is a multiple of k.
    """

    def __init__(self, S: SubstitutionDatum, seed_letter: str | None = None, max_depth: int = 64):
        self.S = S
        self.datum = S.datum
        e = self.datum.identity
        start = seed_letter or S.alphabet[0]
        orbit = [start]
        while True:
            nxt = S.letter_at(orbit[-1], e)
            if nxt in orbit:
                self.preperiod = orbit.index(nxt)
                self.period = len(orbit) - self.preperiod
                break
            orbit.append(nxt)
        self.letter = orbit[self.preperiod]
        self.cycle = tuple(orbit[self.preperiod:])
        self.max_depth = max_depth
        self._parent: dict[tuple, tuple[tuple, tuple]] = {}
        self._depth: dict[tuple, int] = {e: 0}
        self._letters: dict[tuple[int, tuple], str] = {}

    def parent(self, gamma: tuple) -> tuple[tuple, tuple]:
        """(eta, zeta) with gamma = D(eta) * zeta and zeta in D(V) cap Gamma."""
        hit = self._parent.get(gamma)
        if hit is None:
            eta, v = locate(self.datum.dilate(gamma, -1), self.datum)
            hit = (eta, self.datum.dilate(v))
            self._parent[gamma] = hit
        return hit

    def depth(self, gamma: Sequence) -> int:
        gamma = tuple(gamma)
        chain = []
        while gamma not in self._depth:
            chain.append(gamma)
            if len(chain) > self.max_depth:
                raise RuntimeError("support recursion does not terminate")
            gamma = self.parent(gamma)[0]
        d = self._depth[gamma]
        for g in reversed(chain):
            d += 1
            self._depth[g] = d
        return d

    def in_window(self, gamma: Sequence, n: int) -> bool:
        return self.depth(gamma) <= n

    def letter_at_level(self, gamma: Sequence, residue: int) -> str:
        """S^m(P_c)(gamma) for m = residue mod k, m >= depth(gamma)."""
        k = self.period
        gamma = tuple(gamma)
        chain = []
        r = residue % k
        while (r, gamma) not in self._letters:
            if not any(gamma):
                self._letters[(r, gamma)] = self.cycle[r]
                break
            eta, zeta = self.parent(gamma)
            chain.append((r, gamma, zeta))
            gamma, r = eta, (r - 1) % k
        value = self._letters[(r, gamma)]
        for r, g, zeta in reversed(chain):
            value = self.S.letter_at(value, zeta)
            self._letters[(r, g)] = value
        return value

    def __call__(self, gamma: Sequence) -> str:
        return self.letter_at_level(gamma, 0)

    def window(self, n: int) -> Patch:
        """The fixpoint on V(n k) cap Gamma."""
        pts = support_vn([self.datum.identity], n * self.period, self.datum, self.S.base)
        return Patch({g: self(g) for g in pts})


def fixpoint(S: SubstitutionDatum, seed_letter: str | None = None) -> Fixpoint:
    return Fixpoint(S, seed_letter)


def fixpoint_eval(handle: Fixpoint, gamma: Sequence) -> str:
    return handle(gamma)
