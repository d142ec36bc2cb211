"""Command-line front end: ``competition {eigen,check,solve,sweep} --config run.ini``.

Config file (INI)::

    [domain]
    dim = 1
    lengths = 1.0
    interior_counts = 200

    [species.u]
    growth = "15 - u - 0.1*v"

    [species.v]
    growth = "15 - 0.1*u - v"

    [solver]
    tol_outer = 1e-8
    tol_inner = 1e-10
    max_iter = 200000
    potential = 0.0

    [outputs]
    fields_path = fields.csv
    report_path = report.json
    table_path = sweep.csv

    [sweep]
    name = a
    species = u
    start = 8
    stop = 16
    step = 0.5
    value = 15

Species appear in file order.  Expressions use ``u1 .. uN`` (plus ``u``,
``v`` for two species).  The sweep variable ``name`` is a free identifier
in the growth law of ``species``; ``value`` binds it outside sweeps.

Exit codes: 0 success, 1 config or validation error, 2 criterion negative
(nonexistence, refused solve), 3 numerical failure.
"""
import argparse
import configparser
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .coexist import build_pair, decay_check, solve_coexistence
from .criteria import evaluate_criteria
from .eigen import principal_eigenpair
from .errors import CompetitionError, ConvergenceError, CriterionMarginError, MonotonicityError, RatioDegeneracyError
from .expr import ExprSyntaxError, parse
from .growth import GrowthValidationError, UnboundedGrowthError, build
from .lingrid import Grid

EXIT_OK, EXIT_CONFIG, EXIT_NEGATIVE, EXIT_NUMERIC = 0, 1, 2, 3
NUMERIC_ERRORS = (ConvergenceError, MonotonicityError, CriterionMarginError, RatioDegeneracyError)


class ConfigError(CompetitionError, ValueError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    name: str
    species: str
    start: float
    stop: float
    step: float
    value: float | None = None

    def values(self):
        """Inclusive grid ``start, start+step, .., <= stop``; empty if ``stop < start``."""
        if self.stop < self.start:
            return []
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [self.start + k * self.step for k in range(count)]


@dataclass(frozen=True)
class RunConfig:
    dim: int
    lengths: tuple
    interior_counts: tuple
    species: tuple  # ((name, growth text), ...)
    tol_outer: float = 1e-8
    tol_inner: float = 1e-10
    max_iter: int = 200_000
    potential: float = 0.0
    fields_path: str = "fields.csv"
    report_path: str = "report.json"
    table_path: str = "sweep.csv"
    sweep: SweepSpec | None = None
    base_dir: str = field(default=".", compare=False)

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ConfigError(f"dim must be 1 or 2, got {self.dim}")
        if len(self.lengths) != self.dim or len(self.interior_counts) != self.dim:
            raise ConfigError(f"lengths and interior_counts need {self.dim} entries")
        if any(n < 3 for n in self.interior_counts):
            raise ConfigError(f"interior_counts must be >= 3, got {list(self.interior_counts)}")
        if any(not (v > 0) for v in self.lengths):
            raise ConfigError("lengths must be positive")
        if not (self.tol_outer > 0 and self.tol_inner > 0):
            raise ConfigError("tolerances must be positive")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be positive")
        if not self.species:
            raise ConfigError("no [species.<name>] sections")
        names = [s[0] for s in self.species]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate species names")
        sw = self.sweep
        if sw is not None:
            if sw.species not in names:
                raise ConfigError(f"sweep species {sw.species!r} is not defined")
            if not (sw.step > 0):
                raise ConfigError("sweep step must be positive")

    @property
    def grid(self):
        return Grid(self.lengths, self.interior_counts)

    @property
    def names(self):
        return tuple(s[0] for s in self.species)

    def path(self, name, out=None):
        p = Path(name)
        if out is not None:
            return Path(out) / p.name
        return p if p.is_absolute() else Path(self.base_dir) / p

    def params_for(self, i, value=None):
        sw = self.sweep
        if sw is None or sw.species != self.species[i][0]:
            return None
        v = sw.value if value is None else value
        return None if v is None else {sw.name: v}

    def model(self, value=None, strict=True):
        """Growth model; ``value`` binds the sweep variable."""
        n = len(self.species)
        rates = []
        for i, (_, text) in enumerate(self.species):
            rates.append(parse(text, n, self.params_for(i, value)))
        return build(rates, names=self.names, strict=strict)


def _floats(text):
    return tuple(float(t) for t in text.replace(",", " ").split())


def _unquote(text):
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    return text


def parse_config(text, base_dir="."):
    """RunConfig from INI text.  Raises ConfigError on any structural problem."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
        dom = cp["domain"]
        dim = dom.getint("dim")
        lengths = _floats(dom.get("lengths", "1.0"))
        counts = tuple(int(v) for v in _floats(dom["interior_counts"]))
        if len(lengths) == 1 and dim == 2:
            lengths = lengths * 2
        if len(counts) == 1 and dim == 2:
            counts = counts * 2
        species = tuple((s.split(".", 1)[1], _unquote(cp[s]["growth"]))
                        for s in cp.sections() if s.startswith("species."))
        kw = {}
        if cp.has_section("solver"):
            sv = cp["solver"]
            for key, conv in (("tol_outer", float), ("tol_inner", float), ("max_iter", int), ("potential", float)):
                if key in sv:
                    kw[key] = conv(sv[key])
        if cp.has_section("outputs"):
            for key in ("fields_path", "report_path", "table_path"):
                if key in cp["outputs"]:
                    kw[key] = _unquote(cp["outputs"][key])
        if cp.has_section("sweep"):
            sw = cp["sweep"]
            kw["sweep"] = SweepSpec(sw["name"].strip(), sw["species"].strip(), float(sw["start"]),
                                    float(sw["stop"]), float(sw["step"]),
                                    float(sw["value"]) if "value" in sw else None)
        return RunConfig(dim, lengths, counts, species, base_dir=str(base_dir), **kw)
    except ConfigError:
        raise
    except (configparser.Error, KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, base_dir=path.parent)


def dump_config(cfg):
    """INI text that :func:`parse_config` maps back to an equal RunConfig."""
    lines = [
        "[domain]",
        f"dim = {cfg.dim}",
        "lengths = " + " ".join(repr(float(v)) for v in cfg.lengths),
        "interior_counts = " + " ".join(str(int(v)) for v in cfg.interior_counts),
        "",
    ]
    for name, text in cfg.species:
        lines += [f"[species.{name}]", f'growth = "{text}"', ""]
    lines += [
        "[solver]",
        f"tol_outer = {cfg.tol_outer!r}",
        f"tol_inner = {cfg.tol_inner!r}",
        f"max_iter = {cfg.max_iter}",
        f"potential = {cfg.potential!r}",
        "",
        "[outputs]",
        f"fields_path = {cfg.fields_path}",
        f"report_path = {cfg.report_path}",
        f"table_path = {cfg.table_path}",
    ]
    sw = cfg.sweep
    if sw is not None:
        lines += ["", "[sweep]", f"name = {sw.name}", f"species = {sw.species}",
                  f"start = {sw.start!r}", f"stop = {sw.stop!r}", f"step = {sw.step!r}"]
        if sw.value is not None:
            lines.append(f"value = {sw.value!r}")
    return "\n".join(lines) + "\n"


def _coord_columns(grid):
    return ["x", "y"][: grid.dimension], grid.coordinates()


def write_fields_csv(path, grid, columns):
    """``columns``: ordered mapping name -> flat array.  Floats written with ``repr``."""
    heads, coords = _coord_columns(grid)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = [np.ravel(c) for c in coords] + [np.asarray(v) for v in columns.values()]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(heads + list(columns))
        for row in zip(*data):
            w.writerow([repr(float(x)) for x in row])


def read_fields_csv(path):
    """Header and columns (float arrays) of a CSV written by this module."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    cols = {h: np.array([float(r[k]) for r in rows[1:]]) for k, h in enumerate(header)}
    return cols


def _write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2) + "\n")


def cmd_eigen(cfg, args):
    grid = cfg.grid
    eig = principal_eigenpair(grid, q=cfg.potential if cfg.potential else None)
    print(f"lambda1 = {eig.lambda1:.12g}")
    print(f"iterations = {eig.iterations}  residual = {eig.residual:.3e}")
    out = cfg.path(cfg.fields_path, args.out)
    write_fields_csv(out, grid, {"phi1": eig.phi1.values})
    print(f"phi1 written to {out}")
    return EXIT_OK


def _summary(report):
    print(f"lambda1 = {report.lambda1:.12g}")
    for row in report.existence:
        print(f"existence   {row['species']}: margin {row['margin']:+.6g}")
    for row in report.nonexistence:
        print(f"nonexistence {row['species']}: margin {row['margin']:+.6g}")
    print(f"existence: {report.existence_verdict}  nonexistence: {report.nonexistence_verdict}")
    for key, u in (("uniqueness_2sp", report.uniqueness_2sp), ("uniqueness_Nsp", report.uniqueness_Nsp)):
        if u.get("status") == "evaluated":
            print(f"{key}: {u['verdict']}")
        else:
            print(f"{key}: {u.get('status')} ({u.get('reason', '')})")


def cmd_check(cfg, args):
    grid = cfg.grid
    model = cfg.model()
    report = evaluate_criteria(grid, model, tol=cfg.tol_outer)
    out = cfg.path(cfg.report_path, args.out)
    _write_json(out, report.to_dict())
    _summary(report)
    if report.existence_verdict:
        return EXIT_OK
    if report.nonexistence_verdict:
        print("nonexistence certified")
        return EXIT_NEGATIVE
    print("inconclusive: neither existence nor nonexistence criterion holds")
    return EXIT_OK


def _sandwich_dict(cert):
    return [{"species": s.species, "ok": s.ok, "strict": s.strict,
             "lower_margin": s.lower_margin, "upper_margin": s.upper_margin} for s in cert.species]


def run_solve(cfg, model, force=False):
    """Report entries and field columns for one coexistence solve."""
    grid = cfg.grid
    tol = cfg.tol_outer
    pair = build_pair(grid, model, tol, force=force, inner_tol=cfg.tol_inner, max_iter=cfg.max_iter)
    res = solve_coexistence(grid, model, pair, tol=tol, inner_tol=cfg.tol_inner, max_iter=cfg.max_iter)
    names = cfg.names
    sol = {
        "residuals": list(res.residuals),
        "residuals_maximal": list(res.residuals_maximal),
        "residuals_minimal": list(res.residuals_minimal),
        "iterations": res.iterations,
        "sandwich_certificate": res.sandwich_certificate,
        "sandwich": _sandwich_dict(res.sandwich),
        "maximal_minimal_gap": res.maximal_minimal_gap,
        "unique_in_sector": res.unique_in_sector,
        "sup_norms": [float(np.max(np.abs(f.values))) for f in res.fields],
        "sup_norms_maximal": [float(np.max(np.abs(f.values))) for f in res.maximal],
        "substituted_bounds": [names[i] for i in pair.substituted],
        "max_monotonicity_violation": res.max_violation,
    }
    cols = {n: f.values for n, f in zip(names, res.fields)}
    cols.update({f"lower_{n}": f.values for n, f in zip(names, pair.lowers)})
    cols.update({f"upper_{n}": f.values for n, f in zip(names, pair.uppers)})
    if not res.unique_in_sector:
        cols.update({f"maximal_{n}": f.values for n, f in zip(names, res.maximal)})
        cols.update({f"minimal_{n}": f.values for n, f in zip(names, res.minimal)})
    return res, sol, cols


def cmd_solve(cfg, args):
    grid = cfg.grid
    model = cfg.model()
    report = evaluate_criteria(grid, model, tol=cfg.tol_outer)
    if not report.existence_verdict and not args.force:
        print("existence criterion fails; refusing to solve (use --force)")
        _summary(report)
        return EXIT_NEGATIVE
    forced = not report.existence_verdict
    res, sol, cols = run_solve(cfg, model, force=forced)
    if forced:
        sol["decay"] = [
            {"species": cfg.names[i], "sup_norm": d.sup_norm, "iterations": d.iterations, "decayed": d.decayed}
            for i, d in ((row_i, decay_check(grid, model, row_i, max_iter=cfg.max_iter))
                         for row_i, row in enumerate(report.nonexistence) if row["verdict"])
        ]
    fields_out = cfg.path(cfg.fields_path, args.out)
    write_fields_csv(fields_out, grid, cols)
    _write_json(cfg.path(cfg.report_path, args.out), {"criteria": report.to_dict(), "solution": sol})
    print(f"iterations = {res.iterations}  residuals = {', '.join(f'{r:.3e}' for r in res.residuals)}")
    print(f"maximal/minimal gap = {res.maximal_minimal_gap:.3e}  unique in sector: {res.unique_in_sector}")
    print(f"sandwich certificate: {res.sandwich_certificate}")
    print(f"sup norms: {', '.join(f'{s:.6g}' for s in sol['sup_norms'])}")
    print(f"fields written to {fields_out}")
    return EXIT_OK


def sweep_case(cfg, value):
    """One sweep row; failures are recorded, never raised."""
    names = cfg.names
    row = {"parameter": value, "status": "ok", "lambda1": "", "existence": "", "nonexistence": "",
           "uniqueness_lhs": "", "uniqueness_rhs": "", "uniqueness": "", "unique_in_sector": "", "error": ""}
    for n in names:
        row[f"existence_margin_{n}"] = ""
        row[f"sup_{n}"] = ""
    try:
        grid = cfg.grid
        model = cfg.model(value)
        report = evaluate_criteria(grid, model, tol=cfg.tol_outer)
        row["lambda1"] = report.lambda1
        row["existence"] = report.existence_verdict
        row["nonexistence"] = report.nonexistence_verdict
        for n, r in zip(names, report.existence):
            row[f"existence_margin_{n}"] = r["margin"]
        u = report.uniqueness_2sp if len(names) == 2 else report.uniqueness_Nsp
        if u.get("status") == "evaluated":
            if "species" in u:
                worst = min(u["species"], key=lambda s: s["margin"])
                row["uniqueness_lhs"], row["uniqueness_rhs"] = worst["lhs"], worst["rhs"]
            else:
                row["uniqueness_lhs"], row["uniqueness_rhs"] = u["lhs"], u["rhs"]
            row["uniqueness"] = u["verdict"]
        res, sol, _ = run_solve(cfg, model, force=not report.existence_verdict)
        for n, s in zip(names, sol["sup_norms_maximal"]):
            row[f"sup_{n}"] = s
        row["unique_in_sector"] = res.unique_in_sector
    except (CompetitionError, ValueError) as exc:
        row["status"] = "numerical failure" if isinstance(exc, NUMERIC_ERRORS) else "invalid"
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _sweep_case_star(args):
    return sweep_case(*args)


def run_sweep(cfg, jobs=1):
    values = cfg.sweep.values()
    if jobs > 1 and len(values) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_sweep_case_star, [(cfg, v) for v in values]))
    else:
        rows = [sweep_case(cfg, v) for v in values]
    return sorted(rows, key=lambda r: r["parameter"])


def sweep_header(cfg):
    names = cfg.names
    return (["parameter", "status", "lambda1", "existence", "nonexistence"]
            + [f"existence_margin_{n}" for n in names]
            + ["uniqueness_lhs", "uniqueness_rhs", "uniqueness"]
            + [f"sup_{n}" for n in names]
            + ["unique_in_sector", "error"])


def _cell(v):
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def cmd_sweep(cfg, args):
    if cfg.sweep is None:
        raise ConfigError("sweep needs a [sweep] section")
    rows = run_sweep(cfg, jobs=args.jobs)
    out = cfg.path(cfg.table_path, args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    header = sweep_header(cfg)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(r[h]) for h in header])
    failed = sum(r["status"] != "ok" for r in rows)
    print(f"{len(rows)} cases ({failed} failed) written to {out}")
    return EXIT_OK


COMMANDS = {"eigen": cmd_eigen, "check": cmd_check, "solve": cmd_solve, "sweep": cmd_sweep}


def build_parser():
    p = argparse.ArgumentParser(prog="competition", description=__doc__.split("\n")[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="INI run configuration")
    p.add_argument("--force", action="store_true", help="solve even if the existence criterion fails")
    p.add_argument("--tol", type=float, default=None, help="override [solver] tol_outer")
    p.add_argument("--out", default=None, help="directory for all output files")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for sweep")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.tol is not None:
            cfg = replace(cfg, tol_outer=args.tol)
        return COMMANDS[args.command](cfg, args)
    except ExprSyntaxError as exc:
        print(f"error: bad growth expression: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, GrowthValidationError, UnboundedGrowthError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CompetitionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
