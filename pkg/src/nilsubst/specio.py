"""Plain-text experiment files and exact point exports.

A file is a sequence of ``[section]`` blocks (parameters, algebra, group,
lattice, substitution, analysis) preceded by an optional ``name = ...`` line.
Every number is an exact integer or fraction expression; decimal literals are
rejected.  ``render`` is canonical, so ``render(parse(text)) == text`` for
rendered files.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Iterable, Sequence

from .group import GradedGroup, LieAlgebra, bch_group
from .lattice import DilationDatum
from .poly import Poly, canon
from .substitution import BudgetError, Patch, SubstitutionDatum, point_budget

SECTIONS = ("parameters", "algebra", "group", "lattice", "substitution", "analysis")
NORMS = ("sup", "koranyi")


class SpecParseError(ValueError):
    def __init__(self, message: str, line: int, column: int, token: str = ""):
        self.message, self.line, self.column, self.token = message, line, column, token
        where = f"line {line}, column {column}"
        super().__init__(f"{where}: {message}" + (f" (at {token!r})" if token else ""))


# Expressions ------------------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<space>\s+)
  | (?P<decimal>\d+\.\d*|\.\d+|\d+[eE][+-]?\d+)
  | (?P<number>\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<arrow>->)
  | (?P<op>[-+*/^(),:\[\]=])
""", re.VERBOSE)


@dataclass
class Token:
    kind: str
    text: str
    col: int


def tokenize(text: str, line: int, offset: int = 0) -> list[Token]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise SpecParseError("unexpected character", line, offset + pos + 1, text[pos])
        kind = m.lastgroup
        if kind == "decimal":
            raise SpecParseError("decimal literals are not allowed, write an exact fraction", line,
                                 offset + pos + 1, m.group())
        if kind != "space":
            out.append(Token(kind, m.group(), offset + pos + 1))
        pos = m.end()
    return out


class _Parser:
    """Recursive descent over one line's tokens."""

    def __init__(self, tokens: list[Token], line: int, end_col: int):
        self.tokens = tokens
        self.i = 0
        self.line = line
        self.end_col = end_col

    def peek(self) -> Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def error(self, message: str):
        tok = self.peek()
        if tok is None:
            raise SpecParseError(message, self.line, self.end_col, "end of line")
        raise SpecParseError(message, self.line, tok.col, tok.text)

    def accept(self, text: str) -> bool:
        tok = self.peek()
        if tok is not None and tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str):
        if not self.accept(text):
            self.error(f"expected {text!r}")

    def done(self) -> bool:
        return self.i == len(self.tokens)

    def finish(self):
        if not self.done():
            self.error("unexpected trailing input")

    def name(self) -> str:
        tok = self.peek()
        if tok is None or tok.kind not in ("name", "number"):
            self.error("expected a name")
        self.i += 1
        return tok.text

    def expr(self) -> Poly:
        neg = False
        if self.accept("-"):
            neg = True
        elif self.accept("+"):
            pass
        value = self.term()
        if neg:
            value = -value
        while True:
            if self.accept("+"):
                value = value + self.term()
            elif self.accept("-"):
                value = value - self.term()
            else:
                return value

    def term(self) -> Poly:
        value = self.factor()
        while True:
            if self.accept("*"):
                value = value * self.factor()
            elif self.accept("/"):
                tok = self.peek()
                divisor = self.factor()
                if not divisor.is_constant() or divisor.constant() == 0:
                    self.i -= 1
                    raise SpecParseError("division by a non-constant or zero", self.line, tok.col, tok.text)
                value = value / divisor.constant()
            else:
                return value

    def factor(self) -> Poly:
        if self.accept("-"):
            return -self.factor()
        base = self.atom()
        if self.accept("^"):
            tok = self.peek()
            if tok is None or tok.kind != "number":
                self.error("expected an integer exponent")
            self.i += 1
            base = base ** int(tok.text)
        return base

    def atom(self) -> Poly:
        tok = self.peek()
        if tok is None:
            self.error("expected a value")
        if tok.kind == "number":
            self.i += 1
            return Poly.const(int(tok.text))
        if tok.kind == "name":
            self.i += 1
            return Poly.var(tok.text)
        if self.accept("("):
            value = self.expr()
            self.expect(")")
            return value
        self.error("expected a value")

    def expr_list(self) -> list[Poly]:
        items = [self.expr()]
        while self.accept(","):
            items.append(self.expr())
        return items


def parse_expr(text: str, line: int = 1) -> Poly:
    p = _Parser(tokenize(text, line), line, len(text) + 1)
    value = p.expr()
    p.finish()
    return value


def fmt_expr(p: Poly) -> str:
    return str(p)


def _fmt_number(x) -> str:
    return str(canon(Fraction(x)))


# Spec files ---------------------------------------------------------------------------------

@dataclass
class SpecFile:
    name: str = ""
    parameters: dict[str, Fraction] = field(default_factory=dict)
    dimension: int | None = None
    brackets: dict[tuple[int, int], dict[int, Poly]] = field(default_factory=dict)
    degrees: tuple[int, ...] | None = None
    law: str | None = None
    corrections: dict[int, Poly] = field(default_factory=dict)
    scales: list[Poly] | None = None
    box: list[tuple[Poly, Poly]] | None = None
    stretch: Poly | None = None
    norm: str | None = None
    alphabet: tuple[str, ...] | None = None
    table: dict[str, dict[tuple, str]] = field(default_factory=dict)
    analysis: dict[str, list[Poly]] = field(default_factory=dict)

    # evaluation -------------------------------------------------------------------

    def value(self, p: Poly):
        q = Poly.lift(p).subs(self.parameters)
        if not q.is_constant():
            raise ValueError(f"unbound symbols {sorted(q.symbols())} in {p}")
        return canon(Fraction(q.constant()))

    def algebra(self) -> LieAlgebra:
        if self.dimension is None:
            raise ValueError("no [algebra] section")
        brackets = {}
        for (i, j), row in self.brackets.items():
            brackets[(i, j)] = {k: self.value(c) for k, c in row.items()}
        return LieAlgebra(self.dimension, brackets, name=self.name)

    def group(self) -> GradedGroup:
        if self.degrees is None or self.law is None:
            raise ValueError("no [group] section")
        if self.law == "bch":
            return bch_group(self.algebra(), self.degrees, name=self.name)
        d = len(self.degrees)
        corr = [Poly.lift(self.corrections.get(i, Poly())).subs(self.parameters) for i in range(d)]
        return GradedGroup(self.degrees, corr, name=self.name)

    def datum(self, samples: int = 30, seed: int = 0) -> DilationDatum:
        if self.scales is None or self.box is None or self.stretch is None:
            raise ValueError("no [lattice] section")
        return DilationDatum(self.group(), [self.value(s) for s in self.scales],
                             [(self.value(a), self.value(b)) for a, b in self.box], self.value(self.stretch),
                             norm=self.norm or "sup", name=self.name, samples=samples, seed=seed)

    def substitution(self, datum: DilationDatum | None = None) -> SubstitutionDatum:
        if self.alphabet is None:
            raise ValueError("no [substitution] section")
        return SubstitutionDatum(datum or self.datum(), self.alphabet, self.table)

    def analysis_values(self, key: str, default=None) -> list | None:
        if key not in self.analysis:
            return default
        return [self.value(p) for p in self.analysis[key]]

    def analysis_value(self, key: str, default=None):
        vals = self.analysis_values(key)
        return default if vals is None else vals[0]


def _bracket_rhs(row: dict[int, Poly]) -> str:
    parts = []
    for k in sorted(row):
        c = Poly.lift(row[k])
        basis = f"X{k + 1}"
        if c.is_constant():
            v = Fraction(c.constant())
            sign = "-" if v < 0 else "+"
            v = abs(v)
            body = basis if v == 1 else f"{_fmt_number(v)}*{basis}"
        elif len(c.terms) == 1:
            body = f"{c}*{basis}"
            sign, body = ("-", body[1:]) if body.startswith("-") else ("+", body)
        else:
            sign, body = "+", f"({c})*{basis}"
        parts.append((sign, body))
    text = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, body in parts[1:]:
        text += f" {sign} {body}"
    return text


def render(spec: SpecFile) -> str:
    out: list[str] = []
    if spec.name:
        out.append(f"name = {spec.name}")
    blocks = []
    if spec.parameters:
        blocks.append(["[parameters]"] + [f"{k} = {_fmt_number(v)}" for k, v in sorted(spec.parameters.items())])
    if spec.dimension is not None:
        lines = ["[algebra]", f"dimension = {spec.dimension}"]
        for (i, j) in sorted(spec.brackets):
            row = {k: c for k, c in spec.brackets[(i, j)].items() if not Poly.lift(c).is_zero()}
            if row:
                lines.append(f"[X{i + 1}, X{j + 1}] = {_bracket_rhs(row)}")
        blocks.append(lines)
    if spec.degrees is not None:
        lines = ["[group]", "degrees = " + ", ".join(map(str, spec.degrees)), f"law = {spec.law}"]
        if spec.law == "explicit":
            for i in sorted(spec.corrections):
                if not Poly.lift(spec.corrections[i]).is_zero():
                    lines.append(f"x{i + 1} = {fmt_expr(spec.corrections[i])}")
        blocks.append(lines)
    if spec.scales is not None:
        lines = ["[lattice]", "scales = " + ", ".join(fmt_expr(s) for s in spec.scales)]
        lines.append("box = " + ", ".join(f"[{fmt_expr(a)}, {fmt_expr(b)})" for a, b in spec.box))
        lines.append(f"stretch = {fmt_expr(spec.stretch)}")
        lines.append(f"norm = {spec.norm or 'sup'}")
        blocks.append(lines)
    if spec.alphabet is not None:
        lines = ["[substitution]", "alphabet = " + ", ".join(spec.alphabet)]
        for a in spec.alphabet:
            for x in sorted(spec.table.get(a, {})):
                pt = ", ".join(_fmt_number(c) for c in x)
                lines.append(f"{a}: ({pt}) -> {spec.table[a][x]}")
        blocks.append(lines)
    if spec.analysis:
        blocks.append(["[analysis]"] + [f"{k} = " + ", ".join(fmt_expr(p) for p in v)
                                        for k, v in sorted(spec.analysis.items())])
    for b in blocks:
        if out:
            out.append("")
        out.extend(b)
    return "\n".join(out) + "\n"


_SECTION = re.compile(r"\[([a-z]+)\]")
_NAME_LINE = re.compile(r"name\s*=\s*([A-Za-z0-9_.-]+)")


def _const(p: Poly, parser: _Parser, tok: Token):
    if not p.is_constant():
        raise SpecParseError("expected a number", parser.line, tok.col, tok.text)
    return canon(Fraction(p.constant()))


def _positive_int(p: _Parser) -> int:
    tok = p.peek()
    v = _const(p.expr(), p, tok) if tok is not None else p.error("expected a number")
    if not isinstance(v, int) or v <= 0:
        raise SpecParseError("expected a positive integer", p.line, tok.col, tok.text)
    return v


def parse(text: str) -> SpecFile:
    spec = SpecFile()
    section = None
    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].rstrip()
        stripped = body.strip()
        if not stripped:
            continue
        indent = len(body) - len(body.lstrip())
        m = _SECTION.fullmatch(stripped)
        if m:
            section = m.group(1)
            if section not in SECTIONS:
                raise SpecParseError(f"unknown section [{section}]", lineno, indent + 1, stripped)
            if section in seen:
                raise SpecParseError(f"duplicate section [{section}]", lineno, indent + 1, stripped)
            seen.add(section)
            continue
        if section is None:
            m = _NAME_LINE.fullmatch(stripped)
            if m is None:
                raise SpecParseError("only 'name = ...' may precede the first section", lineno, indent + 1,
                                     stripped.split()[0])
            spec.name = m.group(1)
            continue
        p = _Parser(tokenize(body, lineno), lineno, len(body) + 1)
        _parse_line(spec, section, p)
    return spec


def _parse_line(spec: SpecFile, section: str, p: _Parser):
    first = p.peek()
    if section == "algebra" and first.text == "[":
        p.expect("[")
        i = _basis_index(p)
        p.expect(",")
        j = _basis_index(p)
        p.expect("]")
        p.expect("=")
        rhs_tok = p.peek()
        rhs = p.expr()
        p.finish()
        if spec.dimension is None:
            raise SpecParseError("dimension must come first", p.line, first.col, first.text)
        row = _linear_in_basis(rhs, spec.dimension, p, rhs_tok)
        if i == j:
            raise SpecParseError("bracket of a basis vector with itself", p.line, first.col, first.text)
        if i > j:
            i, j = j, i
            row = {k: -c for k, c in row.items()}
        spec.brackets[(i, j)] = row
        return
    if section == "substitution" and first.text != "alphabet":
        letter = p.name()
        p.expect(":")
        p.expect("(")
        coords = []
        while True:
            tok = p.peek()
            coords.append(_const(p.expr(), p, tok))
            if not p.accept(","):
                break
        p.expect(")")
        p.expect("->")
        image = p.name()
        p.finish()
        spec.table.setdefault(letter, {})[tuple(coords)] = image
        return
    key = p.name()
    p.expect("=")
    if section == "parameters":
        tok = p.peek()
        spec.parameters[key] = Fraction(_const(p.expr(), p, tok))
    elif section == "algebra":
        if key != "dimension":
            p.i -= 2
            p.error("unknown key")
        spec.dimension = _positive_int(p)
    elif section == "group":
        if key == "degrees":
            vals = [_positive_int(p)]
            while p.accept(","):
                vals.append(_positive_int(p))
            spec.degrees = tuple(vals)
        elif key == "law":
            tok = p.peek()
            law = p.name()
            if law not in ("bch", "explicit"):
                raise SpecParseError("law must be 'bch' or 'explicit'", p.line, tok.col, tok.text)
            spec.law = law
        elif re.fullmatch(r"x\d+", key):
            spec.corrections[int(key[1:]) - 1] = p.expr()
        else:
            p.i -= 2
            p.error("unknown key")
    elif section == "lattice":
        if key == "scales":
            spec.scales = p.expr_list()
        elif key == "box":
            box = []
            while True:
                p.expect("[")
                a = p.expr()
                p.expect(",")
                b = p.expr()
                p.expect(")")
                box.append((a, b))
                if not p.accept(","):
                    break
            spec.box = box
        elif key == "stretch":
            spec.stretch = p.expr()
        elif key == "norm":
            tok = p.peek()
            norm = p.name()
            if norm not in NORMS:
                raise SpecParseError(f"norm must be one of {NORMS}", p.line, tok.col, tok.text)
            spec.norm = norm
        else:
            p.i -= 2
            p.error("unknown key")
    elif section == "substitution":
        letters = [p.name()]
        while p.accept(","):
            letters.append(p.name())
        spec.alphabet = tuple(letters)
    elif section == "analysis":
        spec.analysis[key] = p.expr_list()
    p.finish()


def _basis_index(p: _Parser) -> int:
    tok = p.peek()
    name = p.name()
    m = re.fullmatch(r"X(\d+)", name)
    if not m or int(m.group(1)) < 1:
        raise SpecParseError("expected a basis vector X1, X2, ...", p.line, tok.col, tok.text)
    return int(m.group(1)) - 1


def _linear_in_basis(rhs: Poly, dim: int, p: _Parser, tok: Token) -> dict[int, Poly]:
    row: dict[int, Poly] = {}
    for mono, c in rhs.terms.items():
        basis = [(s, e) for s, e in mono if re.fullmatch(r"X\d+", s)]
        if len(basis) != 1 or basis[0][1] != 1:
            raise SpecParseError("bracket must be linear in the basis vectors", p.line, tok.col, tok.text)
        k = int(basis[0][0][1:]) - 1
        if k >= dim:
            raise SpecParseError(f"basis vector beyond dimension {dim}", p.line, tok.col, tok.text)
        rest = tuple((s, e) for s, e in mono if (s, e) != basis[0])
        row[k] = row.get(k, Poly()) + Poly({rest: c})
    return row


def spec_from_objects(name: str = "", algebra: LieAlgebra | None = None, group: GradedGroup | None = None,
                      datum: DilationDatum | None = None, substitution: SubstitutionDatum | None = None,
                      parameters: dict | None = None, analysis: dict | None = None) -> SpecFile:
    """Numeric SpecFile for already-built objects."""
    spec = SpecFile(name=name, parameters={k: Fraction(v) for k, v in (parameters or {}).items()})
    if substitution is not None:
        datum = datum or substitution.datum
    if datum is not None:
        group = group or datum.group
    if group is not None:
        algebra = algebra or group.algebra
    if algebra is not None:
        spec.dimension = algebra.dim
        spec.brackets = {k: {t: Poly.lift(c) for t, c in row.items()} for k, row in algebra.brackets.items()}
    if group is not None:
        spec.degrees = tuple(group.degrees)
        spec.law = group.provenance
        spec.corrections = {i: p for i, p in enumerate(group.corrections) if not p.is_zero()}
    if datum is not None:
        spec.scales = [Poly.lift(s) for s in datum.scales]
        spec.box = [(Poly.lift(a), Poly.lift(b)) for a, b in zip(datum.lo, datum.hi)]
        spec.stretch = Poly.lift(datum.stretch)
        spec.norm = datum.norm.kind
    if substitution is not None:
        spec.alphabet = substitution.alphabet
        spec.table = {a: dict(zip(substitution.base, substitution.rows[a])) for a in substitution.alphabet}
    spec.analysis = {k: [Poly.lift(x) for x in (v if isinstance(v, (list, tuple)) else [v])]
                     for k, v in (analysis or {}).items()}
    return spec


# Bundled files ----------------------------------------------------------------------------------

def bundled_names() -> list[str]:
    return sorted(p.name for p in resources.files("nilsubst.data").iterdir() if p.name.endswith(".spec"))


def bundled_text(name: str) -> str:
    if not name.endswith(".spec"):
        name += ".spec"
    return resources.files("nilsubst.data").joinpath(name).read_text(encoding="utf-8")


def load_bundled(name: str) -> SpecFile:
    return parse(bundled_text(name))


def load(path) -> SpecFile:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


# Point exports ---------------------------------------------------------------------------------

def _rows(data) -> tuple[list[tuple], str]:
    if isinstance(data, Patch):
        return [tuple(x) + (a,) for x, a in data.items()], "letter"
    rows = sorted((tuple(x), w) for x, w in data)
    return [x + (w,) for x, w in rows], "weight"


def _cell(v) -> str:
    return v if isinstance(v, str) else str(canon(Fraction(v)))


def export_points(data: Patch | Iterable[tuple[tuple, object]], fmt: str = "csv", dim: int | None = None,
                  budget: int | None = None) -> bytes:
    """CSV or JSON rows: exact coordinates, then the letter or weight, in lexicographic order."""
    rows, last = _rows(data)
    if len(rows) > point_budget(budget):
        raise BudgetError(f"{len(rows)} rows exceed the output budget")
    if dim is None:
        dim = len(rows[0]) - 1 if rows else 0
    header = [f"x{i + 1}" for i in range(dim)] + [last]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows([_cell(v) for v in row] for row in rows)
        return buf.getvalue().encode("ascii")
    if fmt == "json":
        doc = {"columns": header, "rows": [[_cell(v) for v in row] for row in rows]}
        return (json.dumps(doc, separators=(",", ":")) + "\n").encode("ascii")
    raise ValueError(f"unknown format {fmt!r}")


def read_points_csv(data: bytes) -> list[tuple]:
    reader = csv.reader(io.StringIO(data.decode("ascii")))
    next(reader)
    return [tuple(canon(Fraction(v)) for v in row[:-1]) + (row[-1],) for row in reader]


def dumps_json(obj) -> str:
    """Deterministic JSON with exact numbers rendered as strings."""
    def conv(v):
        if isinstance(v, Fraction):
            return str(canon(v))
        if isinstance(v, dict):
            return {str(k): conv(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [conv(x) for x in v]
        return v
    return json.dumps(conv(obj), sort_keys=True, indent=2) + "\n"


def rows_csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(["" if row.get(c) is None else _cell(row[c]) if isinstance(row[c], (int, Fraction))
                         else str(row[c]) for c in columns])
    return buf.getvalue()
