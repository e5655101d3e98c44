"""Window statistics of fixpoints: repetitivity, aperiodicity witnesses, frequencies, exports."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from . import fast
from .lattice import DilationDatum, _ball_axes, ball_lattice_points, count_ball_points, sort_points
from .substitution import Fixpoint, Patch, support_vn


def patch_at(fp: Fixpoint, x: Sequence, r) -> Patch:
    """Canonical r-patch at x: gamma -> omega(x * gamma) on B(e, r) cap Gamma."""
    G = fp.datum.group
    x = tuple(x)
    return Patch({g: fp(G.multiply(x, g)) for g in ball_lattice_points(fp.datum.identity, r, fp.datum)})


def norm_power_array(datum: DilationDatum, pts: np.ndarray) -> np.ndarray:
    """Exact |g|^p for integer rows."""
    pts = np.asarray(pts, dtype=np.int64)
    q = datum.norm
    if q.kind == "koranyi":
        x, y, z = pts[..., 0], pts[..., 1], pts[..., 2]
        h = x * x + y * y
        return h * h + z * z
    cols = [np.abs(pts[..., i]) ** (q.exponent // m) for i, m in enumerate(q.degrees)]
    return np.max(np.stack(cols), axis=0)


def _root_ceil(m: int, p: int) -> int:
    """Least integer t >= 0 with t**p >= m."""
    t = max(int(round(m ** (1.0 / p))) - 1, 0) if m > 0 else 0
    while t ** p < m:
        t += 1
    while t > 0 and (t - 1) ** p >= m:
        t -= 1
    return t


class Window:
    """Dense evaluation of a fixpoint on the bounding box of the closed ball B(e, radius)."""

    def __init__(self, fp: Fixpoint, radius: int, jobs: int = 1):
        datum = fp.datum
        self.fp = fp
        self.datum = datum
        self.radius = radius
        self.axes = [np.array([int(k * s) for k in rng], dtype=np.int64)
                     for rng, s in zip(_ball_axes(datum, radius, closed=True), datum.scales)]
        self.first = np.array([a[0] for a in self.axes], dtype=np.int64)
        self.step = np.array([int(s) for s in datum.scales], dtype=np.int64)
        self.shape = tuple(len(a) for a in self.axes)
        self.letters = fast.evaluate_box(fp, self.axes, jobs)
        self.law = fast.IntLaw(datum)

    def index(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(multi-index, inside mask) of integer rows."""
        idx = (np.asarray(pts, dtype=np.int64) - self.first) // self.step
        inside = np.all((idx >= 0) & (idx < np.array(self.shape)), axis=-1)
        return idx, inside

    def lookup(self, pts: np.ndarray) -> np.ndarray:
        idx, inside = self.index(pts)
        if not np.all(inside):
            raise IndexError("point outside the evaluated window")
        return self.letters[tuple(idx[..., j] for j in range(idx.shape[-1]))]

    def points(self) -> np.ndarray:
        return fast.grid(self.axes)

    def ball_points(self, r, closed: bool = True) -> np.ndarray:
        pts = self.points()
        p = self.datum.norm.exponent
        bound = Fraction(r) ** p
        n = norm_power_array(self.datum, pts)
        mask = n <= bound if closed else n < bound
        return pts[mask]


# Patch classes ---------------------------------------------------------------------------------

def _offsets(datum: DilationDatum, r) -> np.ndarray:
    return np.array(sort_points(ball_lattice_points(datum.identity, r, datum)), dtype=np.int64).reshape(-1, datum.dim)


def classes_exact(window: Window, centers: np.ndarray, r) -> np.ndarray:
    """Class label per center from explicit letter tuples."""
    offs = _offsets(window.datum, r)
    law = window.law
    cols = [window.lookup(law.multiply(centers, o)) for o in offs]
    stacked = np.stack(cols, axis=1) if cols else np.zeros((len(centers), 0), dtype=np.int16)
    _, labels = np.unique(stacked, axis=0, return_inverse=True)
    return labels.reshape(-1)


def _column_axis(datum: DilationDatum) -> int | None:
    """A central coordinate whose correction ignores it: patches are unions of segments along it."""
    G = datum.group
    degs = G.degrees
    top = max(range(G.dim), key=lambda i: (degs[i], i))
    names = {f"x{top + 1}", f"y{top + 1}"}
    if any(names & p.symbols() for p in G.corrections):
        return None
    if top != G.dim - 1:
        return None
    return top


def classes_hashed(window: Window, centers: np.ndarray, r, seed: int = 0) -> np.ndarray:
    """Class label per center from two independent polynomial hashes over column segments.

    B(e, r) splits into horizontal offsets h, each carrying a symmetric run of
    top-coordinate values; x * (h, z) = x * (h, 0) shifted along the central top
    coordinate, so each run is a contiguous segment of one column of the window.
    """
    datum = window.datum
    top = _column_axis(datum)
    if top is None:
        return classes_exact(window, centers, r)
    offs = _offsets(datum, r)
    runs: dict[tuple, int] = {}
    for o in offs:
        key = tuple(int(v) for v in o[:top])
        runs[key] = max(runs.get(key, -1), int(o[top]) // int(datum.scales[top]))
    rng = np.random.default_rng(seed)
    letters = window.letters.astype(np.uint64) + np.uint64(1)
    nz = window.shape[top]
    law = window.law
    hashes = []
    with np.errstate(over="ignore"):
        for _ in range(2):
            base = np.uint64(rng.integers(1 << 40, 1 << 62) | 1)
            powers = np.ones(nz + 1, dtype=np.uint64)
            for i in range(1, nz + 1):
                powers[i] = powers[i - 1] * base
            prefix = np.zeros(letters.shape[:-1] + (nz + 1,), dtype=np.uint64)
            for i in range(nz):
                prefix[..., i + 1] = prefix[..., i] * base + letters[..., i]
            weights = {h: np.uint64(rng.integers(1 << 40, 1 << 62) | 1) for h in runs}
            hashes.append((prefix, powers, weights, np.zeros(len(centers), dtype=np.uint64)))
        for h, m in runs.items():
            g = np.zeros(datum.dim, dtype=np.int64)
            g[:top] = h
            g[top] = -m * int(datum.scales[top])
            idx, inside = window.index(law.multiply(centers, g))
            length = 2 * m + 1
            if not np.all(inside) or np.any(idx[:, top] + length > nz):
                raise IndexError("patch leaves the evaluated window")
            col = tuple(idx[:, j] for j in range(top))
            s = idx[:, top]
            for prefix, powers, weights, total in hashes:
                seg = prefix[col + (s + length,)] - prefix[col + (s,)] * powers[length]
                total += seg * weights[h]
    labels_per_hash = [total for *_, total in hashes]
    pair = np.stack(labels_per_hash, axis=1)
    _, labels = np.unique(pair, axis=0, return_inverse=True)
    return labels.reshape(-1)


# Repetitivity --------------------------------------------------------------------------------

@dataclass
class RepetitivityRow:
    r: int
    R: int | None
    classes: int
    centers: int

    @property
    def ratio(self) -> Fraction | None:
        return None if self.R is None else Fraction(self.R, self.r)


@dataclass
class RepetitivityProfile:
    rows: list[RepetitivityRow]
    window: int
    norm: str
    positions: int
    method: str

    def as_table(self) -> list[dict]:
        return [{"r": row.r, "R": row.R, "ratio": None if row.ratio is None else str(row.ratio),
                 "classes": row.classes, "centers": row.centers} for row in self.rows]


def repetitivity_profile(fp: Fixpoint | Window, radii: Sequence[int], window: int | None = None,
                         positions: int = 24, seed: int = 0, method: str = "hash") -> RepetitivityProfile:
    """R(r): least R such that every r-patch of the window occurs in B(y, R) for the tested y.

    A patch centred at x counts as occurring in B(y, R) when |y^-1 x| + r <= R.
    Centres range over |x| <= W - r; positions y are e plus a seeded sample with
    |y| <= W / 3, and R must satisfy |y| + R <= W, otherwise the row is unbounded.
    """
    win = fp if isinstance(fp, Window) else Window(fp, window)
    W = win.radius
    datum = win.datum
    p = datum.norm.exponent
    law = win.law
    all_pts = win.points()
    all_pow = norm_power_array(datum, all_pts)
    near = all_pts[all_pow * 3 ** p <= W ** p]
    rng = random.Random(seed)
    chosen = sorted(rng.sample(range(len(near)), min(positions, len(near))))
    ys = [np.zeros(datum.dim, dtype=np.int64)] + [near[i] for i in chosen]
    ys_pow = [int(norm_power_array(datum, y)) for y in ys]
    rows = []
    for r in radii:
        centers = all_pts[all_pow <= (W - r) ** p]
        if method == "hash":
            labels = classes_hashed(win, centers, r, seed)
        elif method == "exact":
            labels = classes_exact(win, centers, r)
        else:
            raise ValueError(f"unknown method {method!r}")
        order = np.argsort(labels, kind="stable")
        sorted_labels = labels[order]
        centers = centers[order]
        starts = np.flatnonzero(np.r_[True, sorted_labels[1:] != sorted_labels[:-1]])
        worst = r
        for y, ypow in zip(ys, ys_pow):
            d = norm_power_array(datum, law.multiply(law.inverse(y), centers))
            need = int(np.minimum.reduceat(d, starts).max())
            R_y = r + _root_ceil(need, p)
            if (W - R_y) < 0 or (W - R_y) ** p < ypow:
                worst = None
                break
            worst = max(worst, R_y)
        rows.append(RepetitivityRow(r, worst, len(starts), len(centers)))
    return RepetitivityProfile(rows, W, datum.norm.kind, len(ys), method)


# Aperiodicity ------------------------------------------------------------------------------------

@dataclass
class Witness:
    gamma: tuple
    n: int
    zeta: tuple | None
    shifted: str | None = None
    plain: str | None = None


@dataclass
class AperiodicityCertificate:
    radius: object
    witnesses: list[Witness] = field(default_factory=list)

    @property
    def missing(self) -> list[tuple]:
        return [w.gamma for w in self.witnesses if w.zeta is None]

    @property
    def complete(self) -> bool:
        return not self.missing

    @property
    def coverage(self) -> float:
        return 1.0 if not self.witnesses else 1 - len(self.missing) / len(self.witnesses)


def escape_level(gamma: Sequence, datum: DilationDatum, k: int = 1, n_max: int = 64) -> int:
    """Least multiple n of k with gamma outside D^n(Gamma)."""
    n = k
    while datum.inside_dilated_lattice(gamma, n):
        n += k
        if n > n_max:
            raise ValueError("identity has no escape level")
    return n


def aperiodicity_certificate(fp: Fixpoint, radius, closed: bool = True) -> AperiodicityCertificate:
    datum = fp.datum
    G = datum.group
    cert = AperiodicityCertificate(radius)
    shells: list[list[tuple]] = []

    def shell(j: int) -> list[tuple]:
        while len(shells) < j:
            m = len(shells) + 1
            pts = support_vn([datum.identity], m, datum, fp.S.base)
            seen = set().union(*map(set, shells)) if shells else set()
            shells.append(sort_points(pts - seen))
        return shells[j - 1]

    gammas = sort_points(ball_lattice_points(datum.identity, radius, datum, closed=closed))
    for gamma in gammas:
        if not any(gamma):
            continue
        n = escape_level(gamma, datum, fp.period)
        found = None
        for j in range(1, n + 1):
            for zeta in shell(j):
                a = fp(G.multiply(gamma, zeta))
                b = fp(zeta)
                if a != b:
                    found = Witness(gamma, n, zeta, a, b)
                    break
            if found:
                break
        cert.witnesses.append(found or Witness(gamma, n, None))
    return cert


# Frequencies ---------------------------------------------------------------------------------------

def letter_frequencies(fp: Fixpoint | Window, radii: Sequence, window: int | None = None,
                       jobs: int = 1) -> list[dict]:
    """Exact letter counts on open balls B(e, r) with successive differences."""
    win = fp if isinstance(fp, Window) else Window(fp, window or max(radii), jobs)
    datum = win.datum
    p = datum.norm.exponent
    alphabet = win.fp.S.alphabet
    pts = win.points()
    pw = norm_power_array(datum, pts)
    lets = win.letters.reshape(-1)
    order = np.argsort(pw, kind="stable")
    pw_sorted = pw[order]
    cum = np.cumsum(np.eye(len(alphabet), dtype=np.int64)[lets[order]], axis=0)
    rows = []
    prev: dict[str, Fraction] = {}
    for r in radii:
        if r > win.radius:
            raise ValueError("radius exceeds the evaluated window")
        n = int(np.searchsorted(pw_sorted, Fraction(r) ** p, side="left"))
        counts = cum[n - 1] if n else np.zeros(len(alphabet), dtype=np.int64)
        for a, c in zip(alphabet, counts):
            f = Fraction(int(c), n) if n else Fraction(0)
            rows.append({"r": r, "letter": a, "count": int(c), "total": n, "frequency": f,
                         "difference": None if a not in prev else f - prev[a]})
            prev[a] = f
    return rows


def ball_count_ratios(datum: DilationDatum, radii: Sequence[int], covolume=None) -> list[dict]:
    """|B_r cap Gamma|, the ratio to the previous radius and covol * count / r^Q."""
    if covolume is None:
        covolume = 1
        for s in datum.scales:
            covolume *= Fraction(s)
    Q = datum.group.homogeneous_dimension
    rows = []
    prev = None
    for r in radii:
        c = count_ball_points(r, datum)
        rows.append({"r": r, "count": c, "ratio": None if prev is None else Fraction(c, prev),
                     "normalized": Fraction(covolume) * c / Fraction(r) ** Q})
        prev = c
    return rows


# Exports --------------------------------------------------------------------------------------------

def export_weighted_delone(patch: Patch, iota: Mapping[str, object]) -> list[tuple[tuple, Fraction]]:
    weights = {a: Fraction(w) for a, w in iota.items()}
    if len(set(weights.values())) != len(weights):
        raise ValueError("letter weights must be pairwise distinct")
    if any(w <= 0 for w in weights.values()):
        raise ValueError("letter weights must be positive")
    missing = set(patch.counts()) - set(weights)
    if missing:
        raise ValueError(f"no weight for letters {sorted(missing)}")
    return [(x, weights[a]) for x, a in patch.items()]


def fiber_extrema(patch: Patch, axis: int = -1) -> list[tuple[tuple, object, object]]:
    """(horizontal coordinates, min, max) of the chosen coordinate over each fiber."""
    if len(patch) == 0:
        raise ValueError("empty patch")
    table: dict[tuple, list] = {}
    for x in patch.support():
        ax = axis % len(x)
        h = x[:ax] + x[ax + 1:]
        v = x[ax]
        lo_hi = table.get(h)
        if lo_hi is None:
            table[h] = [v, v]
        else:
            lo_hi[0] = min(lo_hi[0], v)
            lo_hi[1] = max(lo_hi[1], v)
    return [(h, lo, hi) for h, (lo, hi) in sorted(table.items())]

