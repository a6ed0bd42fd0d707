"""Command-line front end.

Four commands: ``estimate`` (fit all estimators to one table),
``sweep-upper`` (re-estimate under a range of assumed upper limits),
``simulate`` (Monte-Carlo study from a config file), and
``export-spline`` (grid samples plus an audit dump of one fit).

Every run writes a ``manifest.json`` describing command, input digest,
configuration, and produced files; CSV outputs carry the manifest id in
a leading comment line.  Exit codes: 0 ok, 2 input/validation problem,
3 numerical failure.  Errors are emitted as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .binned import augment_curve, read_table_csv, to_cumulative
from .errors import NumericalError, ValidationError
from .estimators import (
    EstimatorReport,
    KernelCdf,
    LinearCdf,
    StepCdf,
    ecdf_estimator,
    heuristic_stats,
    kernel_estimator,
    rcfp_estimator,
)
from .simulate import METHOD_ORDER, SimConfig, run_study
from .spline import fit

SEED_ENV_VAR = "BINCDF_SEED"
EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3


# ---------------------------------------------------------------------------
# Output plumbing
# ---------------------------------------------------------------------------

def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


class Manifest:
    """Provenance record; the id hashes everything reproducible."""

    def __init__(self, command: str, config: dict, input_digest: str | None = None,
                 master_seed: int | None = None):
        core = {
            "command": command,
            "config": config,
            "input_sha256": input_digest,
            "master_seed": master_seed,
            "version": __version__,
        }
        self.core = core
        self.run_id = hashlib.sha256(_canonical_json(core).encode()).hexdigest()[:16]
        self.outputs: list[str] = []

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "manifest.json"
        doc = dict(self.core, run_id=self.run_id, outputs=sorted(self.outputs),
                   created_utc=_utc_now())
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
        return path


def write_csv(path: Path, header: list[str], rows, run_id: str):
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(f"# manifest: {run_id}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def read_output_csv(path) -> tuple[list[str], list[list[str]]]:
    """Read back a CSV produced by this tool, skipping comment lines."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise ValidationError(f"{path}: empty output file")
    return rows[0], rows[1:]


def csv_text(header: list[str], rows, run_id: str) -> str:
    buf = io.StringIO()
    buf.write(f"# manifest: {run_id}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Shared argument handling
# ---------------------------------------------------------------------------

def _parse_floats(text: str, flag: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ValidationError(f"{flag}: cannot parse {text!r}") from None


def _parse_pseudo(tokens) -> list[tuple[float, float]]:
    nodes = []
    for tok in tokens or ():
        try:
            tau, val = tok.split(":")
            nodes.append((float(tau), float(val)))
        except ValueError:
            raise ValidationError(
                f"--pseudo-node: expected TAU:F, got {tok!r}"
            ) from None
    return nodes


def _load_input(args) -> tuple:
    path = Path(args.input)
    if not path.exists():
        raise FileNotFoundError(f"input file not found: {path}")
    table = read_table_csv(path, units=args.units, upper_limit=args.upper_limit)
    return path, table


def _fitted_methods(table, methods, pseudo_nodes, bandwidth, nominal_n):
    """Fitted CDF object per requested method tag.

    Only the midpoint heuristic tolerates an open-ended top class; all
    curve-based methods need a finite upper limit first.
    """
    curve_methods = [m for m in methods if m != "H"]
    if table.is_open_ended and curve_methods:
        raise ValidationError(
            f"methods {curve_methods} need a finite upper limit; "
            "pass --upper-limit to close the last class"
        )
    curve = None
    if not table.is_open_ended:
        curve = to_cumulative(table)
        if pseudo_nodes:
            for tau, _ in pseudo_nodes:
                if tau <= table.edges[-1]:
                    raise ValidationError(
                        f"pseudo node at {tau!r} lies below the upper limit "
                        f"{table.edges[-1]!r}"
                    )
            curve = augment_curve(curve, pseudo_nodes)
    fitted = {}
    for tag in methods:
        if tag == "S":
            fitted[tag] = fit(curve)
        elif tag == "H":
            if not table.is_open_ended:
                fitted[tag] = LinearCdf(to_cumulative(table))
        elif tag == "E":
            fitted[tag] = StepCdf(table)
        elif tag == "K":
            fitted[tag] = KernelCdf(table, bandwidth=bandwidth, nominal_n=nominal_n)
        elif tag == "R":
            fitted[tag] = LinearCdf(curve)
        else:
            raise ValidationError(f"unknown method tag {tag!r}")
    return curve, fitted


def _reports(table, curve, methods, q_levels, bandwidth, nominal_n):
    reports = {}
    for tag in methods:
        if tag == "S":
            cdf_fit = fit(curve)
            mean, sd = cdf_fit.mean_sd()
            reports[tag] = EstimatorReport(
                method="S",
                q_levels=tuple(q_levels),
                quantiles=tuple(cdf_fit.quantile(q) for q in q_levels),
                mean=mean,
                sd=sd,
                iqr=cdf_fit.iqr(),
            )
        elif tag == "H":
            reports[tag] = heuristic_stats(table, q_levels)
        elif tag == "E":
            reports[tag] = ecdf_estimator(table, q_levels)
        elif tag == "K":
            reports[tag] = kernel_estimator(
                table, q_levels, bandwidth=bandwidth, nominal_n=nominal_n
            )
        elif tag == "R":
            reports[tag] = rcfp_estimator(curve, q_levels)
    return reports


def _q_name(level: float) -> str:
    return f"q{100.0 * level:g}"


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_estimate(args) -> int:
    path, table = _load_input(args)
    q_levels = _parse_floats(args.quantiles, "--quantiles")
    methods = [m.strip().upper() for m in args.methods.split(",") if m.strip()]
    pseudo = _parse_pseudo(args.pseudo_node)
    curve, fitted = _fitted_methods(
        table, methods, pseudo, args.bandwidth, args.nominal_n
    )
    reports = _reports(table, curve, methods, q_levels, args.bandwidth, args.nominal_n)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(
        "estimate",
        {
            "input": str(path),
            "units": args.units,
            "upper_limit": args.upper_limit,
            "pseudo_nodes": [list(p) for p in pseudo],
            "quantiles": q_levels,
            "methods": methods,
            "grid": args.grid,
            "bandwidth": args.bandwidth,
            "nominal_n": args.nominal_n,
        },
        input_digest=_sha256_file(path),
    )

    header = ["dataset", "method"] + [_q_name(q) for q in q_levels] + [
        "mean", "sd", "iqr",
    ]
    rows = []
    for tag in methods:
        rep = reports[tag]
        rows.append(
            [path.stem, tag]
            + [repr(v) for v in rep.quantiles]
            + [repr(rep.mean), repr(rep.sd), repr(rep.iqr)]
        )
    write_csv(out_dir / "reports.csv", header, rows, manifest.run_id)
    manifest.outputs.append("reports.csv")

    doc = {
        "dataset": path.stem,
        "manifest": manifest.run_id,
        "reports": {tag: reports[tag].to_dict() for tag in methods},
    }
    (out_dir / "reports.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    manifest.outputs.append("reports.json")

    grid = None
    if curve is not None:
        grid = np.linspace(curve.taus[0], curve.taus[-1], int(args.grid))
    for tag in methods:
        obj = fitted.get(tag)
        if obj is None or grid is None:
            continue  # open-ended heuristic-only run has no finite grid
        name = f"samples_{tag}.csv"
        write_csv(
            out_dir / name,
            ["tau", "cdf", "pdf"],
            (
                [repr(float(t)), repr(float(c)), repr(float(d))]
                for t, c, d in zip(grid, obj.cdf(grid), obj.pdf(grid))
            ),
            manifest.run_id,
        )
        manifest.outputs.append(name)

    manifest.write(out_dir)
    for tag in methods:
        rep = reports[tag]
        qs = " ".join(f"{_q_name(q)}={v:.6g}" for q, v in zip(q_levels, rep.quantiles))
        print(f"{tag}: {qs} mean={rep.mean:.6g} sd={rep.sd:.6g} iqr={rep.iqr:.6g}")
    print(f"wrote {out_dir}/reports.csv (manifest {manifest.run_id})")
    return EXIT_OK


def cmd_sweep_upper(args) -> int:
    path = Path(args.input)
    if not path.exists():
        raise FileNotFoundError(f"input file not found: {path}")
    limits = _parse_floats(args.limits, "--limits")
    if any(b <= a for a, b in zip(limits, limits[1:])):
        raise ValidationError(f"--limits must be strictly increasing: {limits}")
    q_levels = _parse_floats(args.quantiles, "--quantiles")

    base = read_table_csv(path, units=args.units, upper_limit=limits[0])
    data_top = float(base.edges[-2])
    for lim in limits:
        if lim <= data_top:
            raise ValidationError(
                f"limit {lim!r} is not above the largest observed threshold "
                f"{data_top!r}"
            )

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(
        "sweep-upper",
        {
            "input": str(path),
            "units": args.units,
            "limits": limits,
            "quantiles": q_levels,
            "bandwidth": args.bandwidth,
            "nominal_n": args.nominal_n,
        },
        input_digest=_sha256_file(path),
    )

    rows = []
    for lim in limits:
        table = read_table_csv(path, units=args.units, upper_limit=lim)
        curve = to_cumulative(table)
        reports = _reports(
            table, curve, ["S", "H", "E", "K"], q_levels, args.bandwidth,
            args.nominal_n,
        )
        for tag in ("S", "H", "E", "K"):
            rep = reports[tag]
            for q, v in zip(q_levels, rep.quantiles):
                rows.append([repr(float(lim)), tag, _q_name(q), repr(v)])
            rows.append([repr(float(lim)), tag, "mean", repr(rep.mean)])
            rows.append([repr(float(lim)), tag, "sd", repr(rep.sd)])
            rows.append([repr(float(lim)), tag, "iqr", repr(rep.iqr)])
    write_csv(out_dir / "sweep.csv", ["limit", "method", "metric", "value"],
              rows, manifest.run_id)
    manifest.outputs.append("sweep.csv")
    manifest.write(out_dir)
    print(f"wrote {out_dir}/sweep.csv ({len(limits)} limits, manifest {manifest.run_id})")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg_path = Path(args.config)
    if not cfg_path.exists():
        raise FileNotFoundError(f"config file not found: {cfg_path}")
    raw = _read_config(cfg_path)
    if args.replicates is not None:
        raw["replicates"] = args.replicates
    if args.n is not None:
        raw["n"] = args.n
    if args.seed is not None:
        raw["master_seed"] = args.seed
    elif "master_seed" not in raw and os.environ.get(SEED_ENV_VAR):
        raw["master_seed"] = int(os.environ[SEED_ENV_VAR])
    config = SimConfig.from_dict(raw)

    summary = run_study(config, workers=args.workers)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(
        "simulate",
        config.to_dict(),
        input_digest=_sha256_file(cfg_path),
        master_seed=config.master_seed,
    )
    (out_dir / "study.csv").write_text(
        f"# manifest: {manifest.run_id}\n" + summary.to_csv_text(),
        encoding="utf-8",
    )
    manifest.outputs.append("study.csv")
    (out_dir / "summary.json").write_text(
        json.dumps(summary.to_json_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    manifest.outputs.append("summary.json")
    manifest.write(out_dir)

    print("median |delta| per distribution/method:")
    metrics = config.metrics
    print(f"{'distribution':<28}{'method':<8}" + "".join(f"{m:>12}" for m in metrics))
    for spec in config.distributions:
        for method in METHOD_ORDER:
            cells = "".join(
                f"{summary.median_abs(spec.label(), method, m):>12.5f}"
                for m in metrics
            )
            print(f"{spec.label():<28}{method:<8}{cells}")
    print(f"wrote {out_dir}/study.csv (manifest {manifest.run_id})")
    return EXIT_OK


def cmd_export_spline(args) -> int:
    path, table = _load_input(args)
    pseudo = _parse_pseudo(args.pseudo_node)
    curve, fitted = _fitted_methods(table, ["S"], pseudo, None, None)
    cdf_fit = fitted["S"]

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(
        "export-spline",
        {
            "input": str(path),
            "units": args.units,
            "upper_limit": args.upper_limit,
            "pseudo_nodes": [list(p) for p in pseudo],
            "grid": args.grid,
        },
        input_digest=_sha256_file(path),
    )
    taus, cdf_vals, pdf_vals = cdf_fit.sample_grid(args.grid)
    write_csv(
        out_dir / "spline_samples.csv",
        ["tau", "cdf", "pdf"],
        (
            [repr(float(t)), repr(float(c)), repr(float(d))]
            for t, c, d in zip(taus, cdf_vals, pdf_vals)
        ),
        manifest.run_id,
    )
    manifest.outputs.append("spline_samples.csv")
    doc = dict(cdf_fit.to_dict(), manifest=manifest.run_id)
    (out_dir / "spline.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    manifest.outputs.append("spline.json")
    manifest.write(out_dir)
    print(f"wrote {out_dir}/spline_samples.csv (manifest {manifest.run_id})")
    return EXIT_OK


def _read_config(path: Path) -> dict:
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        return tomllib.loads(text)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON config: {exc}") from exc


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_table_flags(p: argparse.ArgumentParser):
    p.add_argument("input", help="CSV table (lower,upper,count or threshold,cum_percent)")
    p.add_argument("--units", default="auto",
                   choices=["auto", "count", "percent", "proportion"],
                   help="how the count column is scaled (default: auto)")
    p.add_argument("--upper-limit", type=float, default=None,
                   help="finite upper limit closing the last class")
    p.add_argument("--pseudo-node", action="append", metavar="TAU:F",
                   help="extra stabilizing node, repeatable")
    p.add_argument("--grid", type=int, default=512,
                   help="points in exported cdf/pdf samples (default 512)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bincdf",
        description="Estimate distributions from binned frequency tables.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="fit estimators to one table")
    _add_table_flags(est)
    est.add_argument("--quantiles", default="0.25,0.5,0.75",
                     help="comma-separated levels (default quartiles)")
    est.add_argument("--methods", default="S,H,E,K",
                     help="comma-separated tags from S,H,E,K,R")
    est.add_argument("--bandwidth", type=float, default=None,
                     help="kernel bandwidth override")
    est.add_argument("--nominal-n", type=float, default=1000.0,
                     help="pseudo-sample size when the total is unknown")
    est.add_argument("--out", default="bincdf-out", help="output directory")
    est.set_defaults(func=cmd_estimate)

    swp = sub.add_parser("sweep-upper", help="re-estimate under several upper limits")
    swp.add_argument("input")
    swp.add_argument("--units", default="auto",
                     choices=["auto", "count", "percent", "proportion"])
    swp.add_argument("--limits", required=True,
                     help="comma-separated increasing upper limits")
    swp.add_argument("--quantiles", default="0.25,0.5,0.75")
    swp.add_argument("--bandwidth", type=float, default=None)
    swp.add_argument("--nominal-n", type=float, default=1000.0)
    swp.add_argument("--out", default="bincdf-out")
    swp.set_defaults(func=cmd_sweep_upper)

    sim = sub.add_parser("simulate", help="run the Monte-Carlo study")
    sim.add_argument("--config", required=True, help="TOML or JSON study config")
    sim.add_argument("--replicates", type=int, default=None)
    sim.add_argument("--n", type=int, default=None)
    sim.add_argument("--seed", type=int, default=None,
                     help=f"master seed (overrides config and ${SEED_ENV_VAR})")
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--out", default="bincdf-out")
    sim.set_defaults(func=cmd_simulate)

    exp = sub.add_parser("export-spline", help="export one fitted spline")
    _add_table_flags(exp)
    exp.add_argument("--out", default="bincdf-out")
    exp.set_defaults(func=cmd_export_spline)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, FileNotFoundError) as exc:
        _emit_error(type(exc).__name__, str(exc))
        return EXIT_INPUT
    except NumericalError as exc:
        _emit_error("NumericalError", str(exc))
        return EXIT_NUMERIC


def _emit_error(kind: str, message: str):
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


if __name__ == "__main__":
    sys.exit(main())
