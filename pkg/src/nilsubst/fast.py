"""Vectorised integer arithmetic for data whose lattice points have integer coordinates.

Rows of an (N, d) int64 array are group elements.  Every operation is exact:
corrections are evaluated with a common denominator and divisibility is
checked, so a non-integral intermediate raises instead of rounding.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .lattice import DilationDatum, dilated_box_axes

_LIMIT = 2 ** 62


class FastPathError(ValueError):
    pass


class IntLaw:
    def __init__(self, datum: DilationDatum):
        G = datum.group
        if any(Fraction(s).denominator != 1 for s in datum.scales):
            raise FastPathError("lattice scales must be integers")
        if Fraction(datum.stretch).denominator != 1:
            raise FastPathError("stretch must be an integer")
        self.datum = datum
        self.group = G
        self.dim = G.dim
        self.terms = G._int_terms
        self.order = G.order
        self.lam_pow = np.array([int(x) for x in datum.lam_pow], dtype=np.int64)

    def _correction(self, i: int, v: list[np.ndarray]) -> np.ndarray:
        den, terms = self.terms[i]
        total = np.zeros_like(v[0])
        for c, mono in terms:
            t = np.full_like(v[0], c)
            for idx, e in mono:
                for _ in range(e):
                    t = t * v[idx]
            total = total + t
        if np.abs(total).max(initial=0) >= _LIMIT // 4:
            raise OverflowError("coordinates too large for the int64 fast path")
        if den != 1:
            if np.any(total % den):
                raise FastPathError("non-integral product")
            total = total // den
        return total

    def multiply(self, g: np.ndarray, h: np.ndarray) -> np.ndarray:
        g, h = np.broadcast_arrays(np.asarray(g, dtype=np.int64), np.asarray(h, dtype=np.int64))
        v = [g[..., j] for j in range(self.dim)] + [h[..., j] for j in range(self.dim)]
        out = g + h
        for i in range(self.dim):
            if self.terms[i][1]:
                out[..., i] += self._correction(i, v)
        return out

    def inverse(self, g: np.ndarray) -> np.ndarray:
        g = np.asarray(g, dtype=np.int64)
        if self.group.provenance == "bch":
            return -g
        x = np.zeros_like(g)
        for i in self.order:
            x[..., i] = -g[..., i]
            if self.terms[i][1]:
                v = [g[..., j] for j in range(self.dim)] + [x[..., j] for j in range(self.dim)]
                x[..., i] -= self._correction(i, v)
        return x

    def dilate(self, g: np.ndarray) -> np.ndarray:
        return np.asarray(g, dtype=np.int64) * self.lam_pow


class ParentMap:
    """gamma -> (eta, zeta) with gamma = D(eta) * zeta and zeta in D(V) cap Gamma.

    eta is located level by level in dilated coordinates: with u = D(eta_partial)^-1 * gamma,
    eta_i = s_i * floor((u_i / lam^mu_i - lo_i) / s_i).
    """

    def __init__(self, datum: DilationDatum):
        self.law = IntLaw(datum)
        self.datum = datum
        self.levels = datum.levels
        # floor((u - lo*lp) / (s*lp)) = floor((q*u - p) / (q*s*lp)) with lo*lp = p/q
        self.num_off = []
        self.num_mul = []
        self.den = []
        for lo, s, lp in zip(datum.lo, datum.scales, datum.lam_pow):
            shift = Fraction(lo) * lp
            q = shift.denominator
            self.num_mul.append(q)
            self.num_off.append(shift.numerator)
            self.den.append(q * int(s) * int(lp))
        axes = dilated_box_axes(datum, 1)
        self.first = np.array([int(a[0]) for a in axes], dtype=np.int64)
        self.step = np.array([int(s) for s in datum.scales], dtype=np.int64)
        lengths = [len(a) for a in axes]
        strides = [1] * len(lengths)
        for j in range(len(lengths) - 2, -1, -1):
            strides[j] = strides[j + 1] * lengths[j + 1]
        self.strides = np.array(strides, dtype=np.int64)
        self.base_size = int(np.prod(lengths))

    def __call__(self, gamma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        law = self.law
        gamma = np.asarray(gamma, dtype=np.int64)
        eta = np.zeros_like(gamma)
        u = gamma
        for level in self.levels:
            u = law.multiply(law.inverse(law.dilate(eta)), gamma)
            for i in level:
                eta[..., i] = self.step[i] * np.floor_divide(
                    self.num_mul[i] * u[..., i] - self.num_off[i], self.den[i])
        zeta = law.multiply(law.inverse(law.dilate(eta)), gamma)
        return eta, zeta

    def base_index(self, zeta: np.ndarray) -> np.ndarray:
        return ((zeta - self.first) // self.step) @ self.strides


def letter_table(S) -> np.ndarray:
    """T[a, j] = index of S0(alphabet[a])(base[j])."""
    idx = {a: i for i, a in enumerate(S.alphabet)}
    return np.array([[idx[x] for x in S.rows[a]] for a in S.alphabet], dtype=np.int16)


def evaluate_points(fp, points: np.ndarray, chunk: int = 1 << 18, max_depth: int = 64) -> np.ndarray:
    """Letter indices of the fixpoint at the given lattice points (rows)."""
    S = fp.S
    parent = ParentMap(S.datum)
    table = letter_table(S)
    cycle = np.array([S.alphabet.index(c) for c in fp.cycle], dtype=np.int16)
    k = fp.period
    points = np.asarray(points, dtype=np.int64).reshape(-1, S.datum.dim)
    out = np.empty(len(points), dtype=np.int16)
    for start in range(0, len(points), chunk):
        g = points[start:start + chunk]
        chain = []
        while np.any(g):
            if len(chain) >= max_depth:
                raise RuntimeError("support recursion does not terminate")
            g, zeta = parent(g)
            chain.append(parent.base_index(zeta))
        letters = np.full(len(g), cycle[(-len(chain)) % k], dtype=np.int16)
        for z in reversed(chain):
            letters = table[letters, z]
        out[start:start + chunk] = letters
    return out


def grid(axes: list) -> np.ndarray:
    """Cartesian product of integer axes as an (N, d) array, lexicographic order."""
    mesh = np.meshgrid(*[np.asarray(a, dtype=np.int64) for a in axes], indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _slab(fp, x: int, rest: np.ndarray) -> np.ndarray:
    pts = np.concatenate([np.full((len(rest), 1), x, dtype=np.int64), rest], axis=1)
    return evaluate_points(fp, pts)


def evaluate_box(fp, axes: list, jobs: int = 1) -> np.ndarray:
    """Fixpoint letters on the product of axes, shaped like the axes; slabs along the first axis
    go to ``jobs`` worker processes when jobs > 1."""
    shape = tuple(len(a) for a in axes)
    out = np.empty(shape, dtype=np.int16)
    rest = grid(axes[1:]) if len(axes) > 1 else np.zeros((1, 0), dtype=np.int64)
    xs = [int(x) for x in axes[0]]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(jobs) as pool:
            slabs = list(pool.map(_slab, [fp] * len(xs), xs, [rest] * len(xs)))
    else:
        slabs = [_slab(fp, x, rest) for x in xs]
    for j, slab in enumerate(slabs):
        out[j] = slab.reshape(shape[1:])
    return out


def substitute_fast(P, S):
    """Stamping on integer arrays; returns (points, letter indices) sorted lexicographically."""
    law = IntLaw(S.datum)
    table = letter_table(S)
    base = np.array(S.base, dtype=np.int64)
    items = P.items()
    etas = np.array([x for x, _ in items], dtype=np.int64).reshape(-1, S.datum.dim)
    letters = np.array([S.alphabet.index(a) for _, a in items], dtype=np.int16)
    pts = law.multiply(law.dilate(etas)[:, None, :], base[None, :, :]).reshape(-1, S.datum.dim)
    vals = table[letters].reshape(-1)
    order = np.lexsort(pts.T[::-1])
    return pts[order], vals[order]


def support_vn_array(M, n: int, datum: DilationDatum) -> np.ndarray:
    """V(n, M) cap Gamma as a lexicographically sorted (N, d) array, by vectorised stamping."""
    law = IntLaw(datum)
    base = np.array(list(_base_points(datum)), dtype=np.int64)
    current = unique_rows(np.asarray(M, dtype=np.int64).reshape(-1, datum.dim))
    for _ in range(n):
        current = law.multiply(law.dilate(current)[:, None, :], base[None, :, :]).reshape(-1, datum.dim)
        current = unique_rows(current)
    return current


def unique_rows(a: np.ndarray) -> np.ndarray:
    """Distinct rows in lexicographic order."""
    if len(a) == 0:
        return a
    a = a[np.lexsort(a.T[::-1])]
    keep = np.r_[True, np.any(a[1:] != a[:-1], axis=1)]
    return a[keep]


def _base_points(datum: DilationDatum):
    from itertools import product
    return product(*dilated_box_axes(datum, 1))
