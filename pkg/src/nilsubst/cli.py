"""Command-line front end.

Exit status: 0 success, 1 failed check (JSON report on stdout), 2 usage or
parse error.  Files are written atomically.
"""

from __future__ import annotations

import functools
import os
import sys
import tempfile
from fractions import Fraction

import click

from . import dynamics, specio
from .grading import solve_grading, verify_grading
from .group import validate_group
from .lattice import DatumError, count_dilated_box, radii_of_box
from .substitution import (BUDGET_ENV, DEFAULT_BUDGET, BudgetError, SubstitutionError, build_good, fixpoint,
                           is_nonperiodic, is_primitive, iterate)


class CheckFailed(Exception):
    def __init__(self, report: dict):
        self.report = report


def write_atomic(path: str, data: bytes):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(data: bytes | str, out: str | None):
    if isinstance(data, str):
        data = data.encode("utf-8")
    if out:
        write_atomic(out, data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def load_spec(path: str) -> specio.SpecFile:
    """A file path, or the name of a bundled file when no such path exists."""
    if os.path.exists(path):
        return specio.load(path)
    name = os.path.basename(path)
    if name in specio.bundled_names() or name + ".spec" in specio.bundled_names():
        return specio.load_bundled(name)
    raise click.UsageError(f"no such spec file: {path}")


def command(fn):
    """Map library failures onto exit statuses."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except specio.SpecParseError as exc:
            click.echo(f"parse error: {exc}", err=True)
            sys.exit(2)
        except CheckFailed as exc:
            click.echo(specio.dumps_json(exc.report), nl=False)
            sys.exit(1)
        except DatumError as exc:
            click.echo(specio.dumps_json({"check": "datum", "ok": False, "failures": exc.failures}), nl=False)
            sys.exit(1)
        except BudgetError as exc:
            click.echo(specio.dumps_json({"check": "budget", "ok": False, "message": str(exc)}), nl=False)
            sys.exit(1)
        except (SubstitutionError, ValueError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
    return wrapper


def seed_option(fn):
    return click.option("--seed", type=int, default=0, show_default=True, help="Seed for randomized steps.")(fn)


def budget_option(fn):
    return click.option("--budget", type=int, default=None, envvar=BUDGET_ENV,
                        help=f"Point budget (default {DEFAULT_BUDGET}, env {BUDGET_ENV}).")(fn)


def jobs_option(fn):
    return click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True,
                        help="Worker processes; output does not depend on it.")(fn)


def int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma separated integers, got {text!r}")


def parse_point(text: str) -> tuple:
    try:
        return tuple(specio.canon(Fraction(x.strip())) for x in text.split(","))
    except ValueError:
        raise click.BadParameter(f"bad point {text!r}")


@click.group()
@click.version_option("0.1.0")
def main():
    """Substitution tilings on lattices of graded nilpotent groups."""


@main.command()
@click.argument("spec_path")
@click.option("--out", default=None, help="Write the JSON result here.")
@command
def grade(spec_path, out):
    """Find a positive grading compatible with the structure constants."""
    spec = load_spec(spec_path)
    algebra = spec.algebra()
    sol = solve_grading(algebra)
    report = {"check": "grade", "feasible": sol.feasible,
              "kernel_dimension": len(sol.kernel_basis), "kernel_basis": sol.kernel_basis}
    if not sol.feasible:
        raise CheckFailed(report)
    report["degrees"] = list(sol.degrees)
    report["verified"] = verify_grading(algebra, sol.degrees)
    if spec.degrees is not None:
        report["declared_degrees_valid"] = verify_grading(algebra, spec.degrees)
    if out:
        emit(specio.dumps_json(report), out)
    click.echo("grading: " + ", ".join(map(str, sol.degrees)))
    click.echo(f"kernel dimension: {len(sol.kernel_basis)}")


@main.command("check-datum")
@click.argument("spec_path")
@click.option("--samples", type=int, default=30, show_default=True)
@seed_option
@command
def check_datum(spec_path, samples, seed):
    """Validate the group law and the dilation datum."""
    spec = load_spec(spec_path)
    group = spec.group()
    rep = validate_group(group, samples=samples, seed=seed)
    if not rep.ok:
        raise CheckFailed(dict(rep.as_dict(), check="group"))
    if spec.scales is None:
        click.echo(f"group ok ({samples} samples, seed {seed})")
        return
    datum = spec.datum(samples=samples, seed=seed)
    radii = radii_of_box(datum)
    click.echo(f"datum ok: |D(V) cap Gamma| = {count_dilated_box(datum, 1)}, "
               f"radii^{radii.exponent} = ({radii.inner_power}, {radii.outer_power}), stretch {datum.stretch}")


@main.command("build-substitution")
@click.argument("spec_path")
@click.option("--alphabet", default="a,b", show_default=True, help="Comma separated letters.")
@click.option("--fill", type=click.Choice(["constant", "random"]), default="constant", show_default=True)
@click.option("--out", required=True, help="Spec file to write.")
@seed_option
@command
def build_substitution(spec_path, alphabet, fill, out, seed):
    """Construct a good substitution rule on the datum and write it into a spec file."""
    spec = load_spec(spec_path)
    letters = [a.strip() for a in alphabet.split(",") if a.strip()]
    S = build_good(spec.datum(), letters, fill=fill, seed=seed)
    spec.alphabet = S.alphabet
    spec.table = {a: dict(zip(S.base, S.rows[a])) for a in S.alphabet}
    emit(specio.render(spec), out)
    c = S.construction
    click.echo(f"built {len(S.alphabet)}-letter rule: gamma1={c['gamma1']} gamma2={c['gamma2']} "
               f"x1={c['x1']} x2={c['x2']}")


@main.command("check-substitution")
@click.argument("spec_path")
@command
def check_substitution(spec_path):
    """Check primitivity and non-periodicity."""
    spec = load_spec(spec_path)
    S = spec.substitution()
    L = is_primitive(S)
    rep = is_nonperiodic(S)
    if L is None or not rep.ok:
        raise CheckFailed({"check": "substitution", "primitive": L is not None, "L": L,
                           "injective": rep.injective,
                           "failures": [{"gamma": list(g), "a": a, "b": b} for g, a, b in rep.failures],
                           "empty_windows": [list(g) for g in rep.empty_windows]})
    click.echo(f"primitive L={L}, non-periodic")


def _figure_fibers(patch, path, title):
    from .report import plot_fiber_extrema
    plot_fiber_extrema(dynamics.fiber_extrema(patch), path, title)


@main.command("iterate")
@click.argument("spec_path")
@click.option("--n", "n", type=click.IntRange(min=0), required=True)
@click.option("--letter", default=None, help="Start letter (default: first letter).")
@click.option("--out", default=None, help="Output file (default stdout).")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("--figure", default=None, help="Also render the fiber extrema plot to this image file.")
@budget_option
@jobs_option
@command
def iterate_cmd(spec_path, n, letter, out, fmt, figure, budget, jobs):
    """Write S^n(P_a) as exact points."""
    spec = load_spec(spec_path)
    S = spec.substitution()
    a = letter or S.alphabet[0]
    if a not in S.alphabet:
        raise click.BadParameter(f"letter {a!r} not in the alphabet")
    P = iterate(a, n, S, budget=budget, jobs=jobs)
    emit(specio.export_points(P, fmt, dim=S.datum.dim, budget=budget), out)
    if figure:
        _figure_fibers(P, figure, f"S^{n}(P_{a})")
    click.echo(f"S^{n}(P_{a}): {len(P)} points", err=True)


@main.command("fixpoint-eval")
@click.argument("spec_path")
@click.argument("points", nargs=-1, required=True)
@click.option("--seed-letter", default=None)
@command
def fixpoint_eval_cmd(spec_path, points, seed_letter):
    """Evaluate the fixpoint at lattice points given as comma separated coordinates."""
    spec = load_spec(spec_path)
    S = spec.substitution()
    fp = fixpoint(S, seed_letter)
    datum = S.datum
    click.echo(f"# cycle letter {fp.letter}, preperiod {fp.preperiod}, period {fp.period}")
    for text in points:
        g = parse_point(text)
        if len(g) != datum.dim or not datum.in_lattice(g):
            raise click.BadParameter(f"{text!r} is not a lattice point")
        click.echo(",".join(str(x) for x in g) + f",{fp(g)}")


@main.command()
@click.argument("spec_path")
@click.option("--window", type=int, default=None, help="Window radius (default from [analysis]).")
@click.option("--radii", default=None, help="Comma separated patch radii.")
@click.option("--positions", type=int, default=24, show_default=True)
@click.option("--method", type=click.Choice(["hash", "exact"]), default="hash", show_default=True)
@click.option("--out", default=None)
@seed_option
@jobs_option
@command
def repetitivity(spec_path, window, radii, positions, method, out, seed, jobs):
    """Repetitivity profile R(r) on a fixpoint window."""
    spec = load_spec(spec_path)
    S = spec.substitution()
    W = window or spec.analysis_value("window", 20)
    rs = int_list(radii) if radii else spec.analysis_values("radii", [1, 2, 3])
    win = dynamics.Window(fixpoint(S), W, jobs)
    prof = dynamics.repetitivity_profile(win, rs, positions=positions, seed=seed, method=method)
    rows = [dict(r, R="unbounded" if r["R"] is None else r["R"]) for r in prof.as_table()]
    text = f"# window {W}, norm {prof.norm}, positions {prof.positions}, method {method}\n"
    emit(text + specio.rows_csv(rows, ["r", "R", "ratio", "classes", "centers"]), out)


@main.command()
@click.argument("spec_path")
@click.option("--radius", type=int, default=None, help="Closed ball radius of tested translations.")
@click.option("--out", default=None)
@command
def aperiodicity(spec_path, radius, out):
    """Difference witnesses for every nontrivial translation in a ball."""
    spec = load_spec(spec_path)
    S = spec.substitution()
    R = radius or spec.analysis_value("aperiodicity_radius", 5)
    cert = dynamics.aperiodicity_certificate(fixpoint(S), R)
    dim = S.datum.dim
    cols = [f"g{i + 1}" for i in range(dim)] + ["n"] + [f"z{i + 1}" for i in range(dim)] + ["shifted", "plain"]
    rows = []
    for w in cert.witnesses:
        row = {f"g{i + 1}": w.gamma[i] for i in range(dim)}
        row["n"] = w.n
        if w.zeta is not None:
            row.update({f"z{i + 1}": w.zeta[i] for i in range(dim)})
            row.update(shifted=w.shifted, plain=w.plain)
        rows.append(row)
    emit(specio.rows_csv(rows, cols), out)
    if not cert.complete:
        raise CheckFailed({"check": "aperiodicity", "radius": R, "tested": len(cert.witnesses),
                           "missing": [list(g) for g in cert.missing]})
    click.echo(f"certified {len(cert.witnesses)} translations", err=True)


@main.command()
@click.argument("spec_path")
@click.option("--radii", default=None)
@click.option("--window", type=int, default=None)
@click.option("--out", default=None)
@jobs_option
@command
def frequencies(spec_path, radii, window, out, jobs):
    """Letter frequencies on balls B(e, r)."""
    spec = load_spec(spec_path)
    S = spec.substitution()
    rs = int_list(radii) if radii else spec.analysis_values("frequency_radii", [1, 2, 4, 8])
    rows = dynamics.letter_frequencies(fixpoint(S), rs, window or max(rs), jobs=jobs)
    emit(specio.rows_csv(rows, ["r", "letter", "count", "total", "frequency", "difference"]), out)


@main.command()
@click.argument("spec_path")
@click.option("--kind", type=click.Choice(["delone", "fibers"]), default="delone", show_default=True)
@click.option("--n", "n", type=click.IntRange(min=0), default=1, show_default=True)
@click.option("--letter", default=None)
@click.option("--weights", default=None, help="Letter weights, e.g. a=1,b=2 (default from [analysis]).")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("--out", default=None)
@click.option("--figure", default=None, help="Render the fiber extrema plot to this image file.")
@budget_option
@command
def export(spec_path, kind, n, letter, weights, fmt, out, figure, budget):
    """Weighted Delone points or fiber extrema of S^n(P_a)."""
    spec = load_spec(spec_path)
    S = spec.substitution()
    a = letter or S.alphabet[0]
    P = iterate(a, n, S, budget=budget)
    if kind == "delone":
        if weights:
            iota = {}
            for item in weights.split(","):
                k, _, v = item.partition("=")
                iota[k.strip()] = Fraction(v.strip())
        else:
            iota = {c: spec.analysis_value(f"weight_{c}", i + 1) for i, c in enumerate(S.alphabet)}
        pts = dynamics.export_weighted_delone(P, iota)
        emit(specio.export_points(pts, fmt, dim=S.datum.dim, budget=budget), out)
    else:
        rows = dynamics.fiber_extrema(P)
        h = len(rows[0][0])
        cols = [f"h{i + 1}" for i in range(h)] + ["min", "max"]
        table = [dict({f"h{i + 1}": r[0][i] for i in range(h)}, min=r[1], max=r[2]) for r in rows]
        if fmt == "csv":
            emit(specio.rows_csv(table, cols), out)
        else:
            emit(specio.dumps_json({"columns": cols, "rows": [[t[c] for c in cols] for t in table]}), out)
    if figure:
        _figure_fibers(P, figure, f"S^{n}(P_{a})")


if __name__ == "__main__":
    main()
