"""Command-line front end: verification suites, sweeps, machine-readable reports.

Subcommands
-----------
stein-check      residual maxima and derivative-bound certificates for the
                 built-in test family across a grid of scales
transform-check  moment / characteristic-function / coupling identities of the
                 equilibrium transform for one source
fixed-point      Kolmogorov test that the equilibrium transform fixes the
                 Laplace law
sweep            geometric-sum convergence sweep over a p grid with certified
                 bounds (CSV or JSON)
bounds           bound reports (with itemized components) for one random-sum
                 spec, no sampling

Reports are byte-identical for identical (config, seed).  Exit status: 0 when
every certified inequality passes, 1 on any FAIL verdict, 2 on usage errors,
3 on numeric failures.  Flags override values from an optional key=value
config file (--config); all defaults are spelled out in --help.  A relative
--out path is resolved against $LAPLACE_STEIN_OUT when that is set.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

from .errors import QuadratureError, TruncationError
from .laplace import LaplaceParams
from .metrics import EmpiricalSample, kolmogorov_empirical
from .random_sums import (GeometricIndex, RandomSumSpec, Summands,
                          convergence_sweep, fixed_index, general_sum_bound,
                          geometric_sum_bound, iid_sum_bound)
from .seeding import derive_seed, substream
from .stein import certify_bounds, residual, solve, standard_grid, stein_family
from . import transforms
from .transforms import (mc_estimate, sgn_bias_sample, sym_equilibrium_sample,
                         verify_zero_bias_relation)

SCHEMA_VERSION = "1"
ENV_OUT_DIR = "LAPLACE_STEIN_OUT"

SWEEP_COLUMNS = ("p", "d_K", "d_K_band", "d_BL_lower", "d_W_upper",
                 "thm7_bound", "prop1_bound", "verdict")


@dataclass
class ExperimentConfig:
    """Resolved experiment parameters (flags override config-file entries)."""

    command: str
    source: str = "rademacher"
    c: float = math.sqrt(2.0)
    b: float = 1.0
    b_grid: tuple = (0.5, 1.0, 2.0)
    p_grid: tuple = (0.1, 0.01, 0.001)
    n: int = 100_000
    seed: int = 7
    coupling: str = "comonotone"
    index: str = "geometric"
    k: int = 5
    scales: tuple = (1.0,)
    out: Optional[str] = None
    fmt: Optional[str] = None
    plot_data: bool = False
    tol: dict = field(default_factory=dict)


class UsageError(Exception):
    pass


def make_source(cfg: ExperimentConfig):
    factories = {
        "rademacher": transforms.rademacher,
        "uniform": transforms.uniform_symmetric,
        "laplace": transforms.laplace_source,
    }
    if cfg.source not in factories:
        raise UsageError(f"unknown source {cfg.source!r}; choose from "
                         f"{sorted(factories)}")
    return factories[cfg.source](cfg.c)


def _float_list(text):
    return tuple(float(v) for v in str(text).split(",") if v != "")


def _tol_entry(text):
    key, _, value = str(text).partition("=")
    if not _:
        raise argparse.ArgumentTypeError("expected name=value")
    return key.strip(), float(value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="laplace-stein",
        description="verification suites and convergence experiments for "
                    "Laplace approximation of random sums")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key=value config file; "
                                        "explicit flags take precedence")
        p.add_argument("--seed", type=int, help="master seed (default 7)")
        p.add_argument("--n", type=int,
                       help="samples per estimate (default 100000)")
        p.add_argument("--out", help="output path (default: stdout); relative "
                                     f"paths resolve against ${ENV_OUT_DIR}")
        p.add_argument("--format", dest="fmt", choices=("csv", "json"),
                       help="report format (default: csv for sweep, "
                            "json otherwise)")
        p.add_argument("--tol", type=_tol_entry, action="append",
                       help="tolerance override, name=value (repeatable)")

    p = sub.add_parser("stein-check",
                       help="equation residuals and derivative certificates")
    p.add_argument("--b", dest="b_grid", type=_float_list,
                   help="comma list of scales (default 0.5,1,2)")
    common(p)

    p = sub.add_parser("transform-check",
                       help="equilibrium-transform identities for one source")
    p.add_argument("--source", choices=("rademacher", "uniform", "laplace"),
                   help="source family (default rademacher)")
    p.add_argument("--c", type=float,
                   help="source scale parameter (default sqrt(2))")
    common(p)

    p = sub.add_parser("fixed-point",
                       help="Kolmogorov test of the Laplace fixed point")
    p.add_argument("--b", type=float, help="target scale (default 1)")
    common(p)

    p = sub.add_parser("sweep", help="geometric-sum convergence sweep")
    p.add_argument("--source", choices=("rademacher", "uniform", "laplace"),
                   help="summand family (default rademacher)")
    p.add_argument("--c", type=float,
                   help="source scale parameter (default sqrt(2))")
    p.add_argument("--b", type=float,
                   help="target scale; must match the source variance "
                        "(default 1)")
    p.add_argument("--p", dest="p_grid", type=_float_list,
                   help="comma list of success probabilities "
                        "(default 0.1,0.01,0.001)")
    p.add_argument("--plot-data", action="store_true", default=None,
                   help="also write two-column .dat files per metric")
    common(p)

    p = sub.add_parser("bounds", help="bound reports for one random-sum spec")
    p.add_argument("--source", choices=("rademacher", "uniform", "laplace"),
                   help="summand family (default rademacher)")
    p.add_argument("--c", type=float,
                   help="source scale parameter (default sqrt(2))")
    p.add_argument("--index", choices=("geometric", "fixed"),
                   help="index law (default geometric)")
    p.add_argument("--p", dest="p_grid", type=_float_list,
                   help="geometric success probabilities (default 0.1,0.01,0.001)")
    p.add_argument("--k", type=int, help="fixed index value (default 5)")
    p.add_argument("--scales", type=_float_list,
                   help="cyclic per-index scale factors (default 1)")
    p.add_argument("--coupling", choices=("comonotone", "independent"),
                   help="index coupling for the gap term (default comonotone)")
    common(p)
    return parser


def load_config_file(path: str) -> dict:
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


_FILE_PARSERS = {
    "b_grid": _float_list, "p_grid": _float_list, "scales": _float_list,
    "n": int, "seed": int, "k": int, "c": float, "b": float,
    "plot_data": lambda v: v.lower() in ("1", "true", "yes"),
}


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig(command=args.command)
    file_values = load_config_file(args.config) if getattr(args, "config", None) else {}
    known = {f.name for f in fields(ExperimentConfig)}
    aliases = {"p": "p_grid", "b": "b_grid" if args.command == "stein-check"
               else "b", "format": "fmt"}
    for key, raw in file_values.items():
        key = aliases.get(key, key)
        if key not in known:
            raise UsageError(f"unknown config key {key!r}")
        parser = _FILE_PARSERS.get(key, str)
        setattr(cfg, key, parser(raw))
    for key in known:
        flag = getattr(args, key, None)
        if flag is not None:
            setattr(cfg, key, flag)
    if getattr(args, "tol", None):
        cfg.tol = dict(cfg.tol, **dict(args.tol))
    return cfg


def _fmt_float(x) -> str:
    return f"{float(x):.17g}"


def emit_report(results, fmt: str) -> bytes:
    """Serialize a report: stable JSON, or RFC-4180-style CSV with '.' decimal
    separator and 17 significant digits."""
    if fmt == "json":
        return (json.dumps(results, sort_keys=True, indent=2) + "\n").encode()
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
        writer.writerow(results["columns"])
        for row in results["rows"]:
            writer.writerow([v if isinstance(v, str) else _fmt_float(v)
                             for v in row])
        return buf.getvalue().encode()
    raise UsageError(f"unknown format {fmt!r}")


def _resolve_out(path: Optional[str]) -> Optional[str]:
    if path is None:
        return None
    base = os.environ.get(ENV_OUT_DIR)
    if base and not os.path.isabs(path) and os.path.dirname(path) == "":
        return os.path.join(base, path)
    return path


def _write(data: bytes, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(data.decode())
    else:
        with open(out, "wb") as fh:
            fh.write(data)


def _estimate_dict(est) -> dict:
    return {"value": est.value, "std_error": est.std_error}


def cmd_stein_check(cfg: ExperimentConfig):
    tol = cfg.tol.get("residual", 1e-6)
    checks = []
    for b in cfg.b_grid:
        grid = standard_grid(b)
        for h in stein_family():
            sol = solve(h, b)
            res_max = float(np.max(np.abs(residual(sol, grid))))
            cert = certify_bounds(sol, grid)
            ok = bool(res_max <= tol and cert.passed
                      and abs(sol.g(0.0)) <= 1e-10)
            checks.append({
                "label": h.label, "b": b, "target_mean": sol.target_mean,
                "residual_max": res_max, "solution_at_zero": sol.g(0.0),
                "certificate": {"values": cert.values, "limits": cert.limits,
                                "passed": cert.passed},
                "pass": ok,
            })
    all_pass = all(c["pass"] for c in checks)
    report = {"schema_version": SCHEMA_VERSION, "command": "stein-check",
              "b_grid": list(cfg.b_grid), "residual_tolerance": tol,
              "family_size": len(stein_family()), "checks": checks,
              "all_pass": all_pass}
    return report, 0 if all_pass else 1


def _four_se_check(name, observed, expected, se) -> dict:
    se = max(se, 5e-324)
    ok = abs(observed - expected) <= 4.0 * se
    return {"check": name, "observed": observed, "expected": expected,
            "std_error": se, "pass": bool(ok)}


def cmd_transform_check(cfg: ExperimentConfig):
    src = make_source(cfg)
    n, seed = cfg.n, cfg.seed
    results = []

    xl = sym_equilibrium_sample(src, n, derive_seed(seed, "tc-equilibrium"))
    for k in (2, 4):
        est = mc_estimate(xl.values ** k)
        results.append(_four_se_check(
            f"equilibrium_moment_k{k}", est.value,
            transforms.equilibrium_moment(k, src), est.std_error))
    for t in (0.5, 1.0, 2.0):
        est = mc_estimate(np.cos(t * xl.values))
        results.append(_four_se_check(
            f"equilibrium_cf_t{t:g}", est.value,
            transforms.equilibrium_cf(t, src), est.std_error))

    xp = sgn_bias_sample(src, n, derive_seed(seed, "tc-sgn-bias"))
    est = mc_estimate(np.sign(xp.values))
    results.append(_four_se_check("sgn_bias_symmetry", est.value, 0.0,
                                  est.std_error))

    rng = substream(seed, "tc-coupling")
    x = np.asarray(src.sampler(rng, n), dtype=float)
    gap = mc_estimate(np.abs(x - xl.values))
    bound = src.abs_mean + src.abs_third / (6.0 * src.b_equiv ** 2)
    results.append({"check": "equilibrium_gap_bound", "observed": gap.value,
                    "bound": bound, "std_error": gap.std_error,
                    "pass": bool(gap.value <= bound + 4.0 * gap.std_error)})

    if src.zero_bias_sampler is not None:
        for name, f_dd in (("one", lambda x: np.ones_like(x)),
                           ("square", np.square), ("cos", np.cos)):
            est = verify_zero_bias_relation(src, f_dd, n,
                                            derive_seed(seed, "tc-zb", name))
            results.append(_four_se_check(f"zero_bias_relation_{name}",
                                          est.value, 0.0, est.std_error))

    all_pass = all(r["pass"] for r in results)
    report = {"schema_version": SCHEMA_VERSION, "command": "transform-check",
              "source": src.label, "n": n, "seed": seed, "checks": results,
              "all_pass": all_pass}
    return report, 0 if all_pass else 1


def cmd_fixed_point(cfg: ExperimentConfig):
    b = cfg.b
    src = transforms.laplace_source(b)
    sample = sym_equilibrium_sample(src, cfg.n, derive_seed(cfg.seed, "fp"))
    d_k = kolmogorov_empirical(EmpiricalSample.from_values(sample.values),
                               LaplaceParams(0.0, b))
    factor = cfg.tol.get("band_factor", 1.5)
    band = factor * 1.36 / math.sqrt(cfg.n)
    ok = d_k.value <= band
    report = {"schema_version": SCHEMA_VERSION, "command": "fixed-point",
              "b": b, "n": cfg.n, "seed": cfg.seed, "d_K": d_k.value,
              "band": band, "band_factor": factor,
              "verdict": "PASS" if ok else "FAIL"}
    return report, 0 if ok else 1


def _sweep_rows(result) -> list:
    rows = []
    for pt in result.points:
        rep = pt.report
        rows.append([pt.p,
                     rep.empirical["d_K"].value,
                     rep.components["dkw_band"],
                     rep.empirical["d_BL_lower"].value,
                     rep.empirical["d_W_upper"].value,
                     rep.value,
                     rep.components["dk_conversion"],
                     "PASS" if rep.verdict else "FAIL"])
    return rows


def cmd_sweep(cfg: ExperimentConfig):
    src = make_source(cfg)
    if abs(src.sigma2 - 2.0 * cfg.b ** 2) > 1e-9 * max(1.0, src.sigma2):
        raise UsageError(
            f"source variance {src.sigma2:g} does not match 2*b^2 = "
            f"{2 * cfg.b ** 2:g}; adjust --c or --b")
    result = convergence_sweep(src, cfg.p_grid, cfg.n, cfg.seed,
                               alpha=cfg.tol.get("dkw_alpha", 0.05))
    rows = _sweep_rows(result)
    fmt = cfg.fmt or "csv"
    if fmt == "csv":
        report = {"columns": list(SWEEP_COLUMNS), "rows": rows}
    else:
        report = {"schema_version": SCHEMA_VERSION, "command": "sweep",
                  "source": src.label, "b": cfg.b, "n": cfg.n,
                  "seed": cfg.seed, "slope": result.slope,
                  "family_size": result.family_size,
                  "points": [dict(zip(SWEEP_COLUMNS, row)) for row in rows],
                  "components": [pt.report.components for pt in result.points]}
    all_pass = all(pt.report.verdict for pt in result.points)
    extra = None
    if cfg.plot_data and cfg.out:
        extra = _plot_data_files(cfg.out, rows)
    return report, (0 if all_pass else 1), fmt, extra


def _plot_data_files(out: str, rows) -> dict:
    stem = os.path.splitext(out)[0]
    files = {}
    for j, col in enumerate(SWEEP_COLUMNS[1:-1], start=1):
        lines = [f"{_fmt_float(r[0])} {_fmt_float(r[j])}" for r in rows]
        files[f"{stem}_{col}.dat"] = ("\n".join(lines) + "\n").encode()
    return files


def _spec_from_config(cfg: ExperimentConfig, p: float) -> RandomSumSpec:
    src = make_source(cfg)
    if cfg.index == "fixed":
        index = fixed_index(cfg.k)
    else:
        index = GeometricIndex(p)
    return RandomSumSpec(index, Summands(src, cfg.scales))


def cmd_bounds(cfg: ExperimentConfig):
    reports = []
    p_values = cfg.p_grid if cfg.index == "geometric" else (None,)
    for p in p_values:
        spec = _spec_from_config(cfg, p if p is not None else 0.5)
        entry = {"index": cfg.index, "p": p, "k": cfg.k if cfg.index == "fixed"
                 else None, "scales": list(cfg.scales),
                 "coupling": cfg.coupling}
        if spec.summands.is_iid:
            rep = iid_sum_bound(spec, coupling=cfg.coupling)
            entry["iid_sum"] = {"value": rep.value,
                                "components": rep.components}
            if p is not None:
                grep = geometric_sum_bound(
                    p, spec.b_equiv, float(spec.summands.abs_third_at(1)))
                entry["geometric_sum"] = {"value": grep.value,
                                          "components": grep.components}
        rep = general_sum_bound(spec, coupling=cfg.coupling)
        entry["general_sum"] = {"value": rep.value,
                                "components": rep.components}
        reports.append(entry)
    report = {"schema_version": SCHEMA_VERSION, "command": "bounds",
              "source": make_source(cfg).label, "reports": reports}
    return report, 0


def run(cfg: ExperimentConfig) -> int:
    """Execute one command; writes the report and returns the exit status."""
    fmt = cfg.fmt or "json"
    extra_files = None
    if cfg.command == "stein-check":
        report, status = cmd_stein_check(cfg)
    elif cfg.command == "transform-check":
        report, status = cmd_transform_check(cfg)
    elif cfg.command == "fixed-point":
        report, status = cmd_fixed_point(cfg)
    elif cfg.command == "sweep":
        report, status, fmt, extra_files = cmd_sweep(cfg)
    elif cfg.command == "bounds":
        report, status = cmd_bounds(cfg)
    else:
        raise UsageError(f"unknown command {cfg.command!r}")
    out = _resolve_out(cfg.out)
    _write(emit_report(report, fmt), out)
    for path, data in (extra_files or {}).items():
        _write(data, path)
    return status


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 2
    try:
        cfg = resolve_config(args)
        return run(cfg)
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (QuadratureError, TruncationError, OSError) as exc:
        print(f"numeric/runtime failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
