"""Sparse multivariate polynomials with exact rational coefficients.

Symbols are plain strings (``"x1"``, ``"y3"``, ``"mu"``).  A monomial is a
sorted tuple of ``(symbol, exponent)`` pairs; the constant monomial is ``()``.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Mapping, Union

Number = Union[int, Fraction]

_SYM = re.compile(r"([A-Za-z_]+)(\d*)")


def symbol_key(name: str):
    """Natural ordering: x2 sorts before x10."""
    m = _SYM.fullmatch(name)
    if m is None:
        return (name, -1)
    return (m.group(1), int(m.group(2)) if m.group(2) else -1)


def canon(x: Number) -> Number:
    """Return ints for integral values, reduced Fractions otherwise."""
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else x
    return x


def _mono_mul(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    exps = dict(a)
    for s, e in b:
        exps[s] = exps.get(s, 0) + e
    return tuple(sorted(exps.items(), key=lambda t: symbol_key(t[0])))


class Poly:
    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[tuple, Number] | None = None):
        self.terms = {m: canon(Fraction(c)) for m, c in (terms or {}).items() if c != 0}

    @classmethod
    def const(cls, c: Number) -> "Poly":
        return cls({(): c})

    @classmethod
    def var(cls, name: str) -> "Poly":
        return cls({((name, 1),): 1})

    @staticmethod
    def lift(x) -> "Poly":
        return x if isinstance(x, Poly) else Poly.const(x)

    def __add__(self, other):
        other = Poly.lift(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return Poly(out)

    __radd__ = __add__

    def __neg__(self):
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-Poly.lift(other))

    def __rsub__(self, other):
        return Poly.lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return Poly({m: c * other for m, c in self.terms.items()})
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, 0) + c1 * c2
        return Poly(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Poly):
            if not other.is_constant():
                raise ZeroDivisionError("division by a non-constant polynomial")
            other = other.constant()
        if other == 0:
            raise ZeroDivisionError("division by zero")
        return Poly({m: Fraction(c) / other for m, c in self.terms.items()})

    def __pow__(self, n: int):
        out = Poly.const(1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, Poly):
            other = Poly.const(other)
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(m == () for m in self.terms)

    def constant(self) -> Number:
        return self.terms.get((), 0)

    def symbols(self) -> set[str]:
        return {s for m in self.terms for s, _ in m}

    def degree(self) -> int:
        return max((sum(e for _, e in m) for m in self.terms), default=0)

    def subs(self, values: Mapping[str, Number]) -> "Poly":
        out = Poly()
        for m, c in self.terms.items():
            term = Poly.const(c)
            rest = []
            for s, e in m:
                if s in values:
                    term = term * (Fraction(values[s]) ** e)
                else:
                    rest.append((s, e))
            out = out + Poly({tuple(rest): 1}) * term
        return out

    def evaluate(self, values: Mapping[str, Number]) -> Number:
        p = self.subs(values)
        if not p.is_constant():
            raise ValueError(f"unbound symbols {sorted(p.symbols())}")
        return p.constant()

    def sorted_terms(self):
        def key(item):
            m, _ = item
            return (-sum(e for _, e in m), [(symbol_key(s), -e) for s, e in m])

        return sorted(self.terms.items(), key=key)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for m, c in self.sorted_terms():
            c = Fraction(c)
            sign = "-" if c < 0 else "+"
            c = abs(c)
            factors = [f"{s}^{e}" if e > 1 else s for s, e in m]
            if c != 1 or not factors:
                factors.insert(0, str(c))
            parts.append((sign, "*".join(factors)))
        text = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, body in parts[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self) -> str:
        return f"Poly({self})"


def linear_combination(coeffs: Iterable[tuple[Number, Poly]]) -> Poly:
    out = Poly()
    for c, p in coeffs:
        out = out + p * c
    return out
