"""Command-line front end: ``grwa {sweep,alpha,bands,rabi,validate,presets}``.

Exit codes: 0 success, 1 configuration error, 2 sweep finished with point
failures, 3 validation failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, output_dir, resolve_config
from .model import ParameterError, band_info
from .polaron import residuals, solve_alpha_closed
from .presets import PRESETS, preset_names
from .rabi import RABI_METHODS, RabiParams
from .scattering import NUMERIC_METHODS, ScatteringAmplitudes, sweep
from .validate import FAULTS, run_validate

EXIT_OK, EXIT_CONFIG, EXIT_POINT_FAILURES, EXIT_VALIDATION = 0, 1, 2, 3

SWEEP_COLUMNS = ("k", "method", "re_r", "im_r", "re_t", "im_t", "refl_prob", "flux_residual", "error")
ALPHA_COLUMNS = ("j", "alpha", "abs_alpha", "residual")
BANDS_COLUMNS = ("N", "center", "lower", "upper", "width")
RABI_COLUMNS = ("lambda", "level", *RABI_METHODS)
SUMMARY_WINDOW = (0.2 * math.pi, 0.8 * math.pi)


def fmt(x) -> str:
    """17 significant digits, round-trip safe."""
    return format(float(x), ".17g")


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return buf.getvalue()


def _json_text(columns, rows) -> str:
    records = [dict(zip(columns, row)) for row in rows]
    return json.dumps({"columns": list(columns), "rows": records}, indent=1) + "\n"


def _emit(cfg: RunConfig, default_name: str, columns, rows, json_rows=None) -> Path | None:
    """Write the data file; ``None`` output path means stdout."""
    if cfg.output_format == "json":
        text = _json_text(columns, json_rows if json_rows is not None else rows)
    else:
        text = _csv_text(columns, rows)
    path = cfg.output_path
    if path is None and default_name:
        path = output_dir() / f"{default_name}.{cfg.output_format}"
    if path is None:
        sys.stdout.write(text)
        return None
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def _write_metadata(path: Path | None, cfg: RunConfig, command: str, seconds: float, extra=None) -> None:
    if path is None:
        return
    meta = {
        "command": command,
        "tool": "grwa",
        "version": __version__,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "seconds": round(seconds, 3),
        "config": cfg.resolved(),
    }
    if extra:
        meta.update(extra)
    side = path.with_name(path.name + ".meta.json")
    side.write_text(json.dumps(meta, indent=1) + "\n", encoding="utf-8")


def _overrides(args) -> dict:
    over: dict = {}
    if getattr(args, "method", None):
        over["methods"] = [m.strip() for m in args.method.split(",") if m.strip()]
    if getattr(args, "k_points", None) is not None:
        over["grid"] = {"count": args.k_points, "values": None}
    out = {}
    if getattr(args, "out", None):
        out["path"] = args.out
    if getattr(args, "format", None):
        out["format"] = args.format
    if out:
        over["output"] = out
    if getattr(args, "chain_length", None) is not None:
        over["numeric"] = {"chain_length": args.chain_length}
    if getattr(args, "jobs", None) is not None:
        over["jobs"] = args.jobs
    return over


def _apply_cp(cfg_methods, cp):
    """Replace every numeric method by ``numeric-cp{cp}`` (appended if none)."""
    if cp is None:
        return None
    tag = f"numeric-cp{cp}"
    methods = [tag if m in NUMERIC_METHODS else m for m in cfg_methods]
    if tag not in methods:
        methods.append(tag)
    return list(dict.fromkeys(methods))


def _config(args) -> RunConfig:
    over = _overrides(args)
    cfg = resolve_config(args.config, args.preset, over)
    methods = _apply_cp(cfg.methods, getattr(args, "cp", None))
    if methods is not None:
        over["methods"] = methods
        cfg = resolve_config(args.config, args.preset, over)
    return cfg


def sweep_rows(cfg: RunConfig):
    """Amplitudes for every method, grid order within each method."""
    results = {}
    for method in cfg.methods:
        opts = {"chain_length": cfg.chain_length} if method in NUMERIC_METHODS else {}
        try:
            results[method] = sweep(cfg.params, method, cfg.k_grid, jobs=cfg.jobs, **opts)
        except ParameterError as exc:
            # setup failure of a whole method: every point carries the message
            results[method] = [ScatteringAmplitudes.failed(float(k), method, str(exc)) for k in cfg.k_grid]
    return results


def sweep_summary(results) -> dict:
    out = {}
    lo, hi = SUMMARY_WINDOW
    for method, rows in results.items():
        vals = [r.refl_prob for r in rows if r.error is None and lo <= r.k <= hi]
        out[method] = {
            "min_refl_prob": min(vals) if vals else None,
            "max_refl_prob": max(vals) if vals else None,
            "points": len(rows),
            "failed_points": sum(r.error is not None for r in rows),
        }
    return {"window": [lo, hi], "methods": out}


def _row(res):
    if res.error is not None:
        nan = "nan"
        return [fmt(res.k), res.method_tag, nan, nan, nan, nan, nan, nan, res.error]
    return [fmt(res.k), res.method_tag, fmt(res.r.real), fmt(res.r.imag), fmt(res.t.real),
            fmt(res.t.imag), fmt(res.refl_prob), fmt(res.flux_residual), ""]


def _json_row(res):
    if res.error is not None:
        return [res.k, res.method_tag, None, None, None, None, None, None, res.error]
    return [res.k, res.method_tag, res.r.real, res.r.imag, res.t.real, res.t.imag,
            res.refl_prob, res.flux_residual, None]


def cmd_sweep(args) -> int:
    cfg = _config(args)
    t0 = time.perf_counter()
    results = sweep_rows(cfg)
    ordered = [res for method in cfg.methods for res in results[method]]
    rows = [_row(r) for r in ordered]
    json_rows = [_json_row(r) for r in ordered]
    summary = sweep_summary(results)
    path = _emit(cfg, cfg.preset or "sweep", SWEEP_COLUMNS, rows, json_rows)
    _write_metadata(path, cfg, "sweep", time.perf_counter() - t0, {"summary": summary})
    for method, s in summary["methods"].items():
        lo = "n/a" if s["min_refl_prob"] is None else f"{s['min_refl_prob']:.4f}"
        hi = "n/a" if s["max_refl_prob"] is None else f"{s['max_refl_prob']:.4f}"
        print(f"{method:16s} |r|^2 on [0.2pi, 0.8pi]: min {lo} max {hi}"
              f" ({s['failed_points']} failed of {s['points']})", file=sys.stderr)
    if path is not None:
        print(f"wrote {path}", file=sys.stderr)
    failed = sum(s["failed_points"] for s in summary["methods"].values())
    return EXIT_POINT_FAILURES if failed else EXIT_OK


def cmd_alpha(args) -> int:
    cfg = _config(args)
    t0 = time.perf_counter()
    pa = solve_alpha_closed(cfg.params)
    res = residuals(cfg.params, pa.sites, pa.on_sites)
    rows = [[str(int(j)), fmt(a), fmt(abs(a)), fmt(r)] for j, a, r in zip(pa.sites, pa.alphas, res)]
    json_rows = [[int(j), float(a), abs(float(a)), float(r)] for j, a, r in zip(pa.sites, pa.alphas, res)]
    path = _emit(cfg, "", ALPHA_COLUMNS, rows, json_rows)
    _write_metadata(path, cfg, "alpha", time.perf_counter() - t0,
                    {"range": pa.range, "decay_ratio": pa.decay_ratio, "omega1": pa.omega1})
    return EXIT_OK


def cmd_bands(args) -> int:
    cfg = _config(args)
    t0 = time.perf_counter()
    max_N = args.max_n if args.max_n is not None else cfg.bands["max_N"]
    if max_N < 0:
        raise ConfigError(f"max N must be non-negative, got {max_N}")
    infos = [band_info(cfg.params, N) for N in range(max_N + 1)]
    rows = [[str(b.N), fmt(b.center), fmt(b.lower), fmt(b.upper), fmt(b.width)] for b in infos]
    json_rows = [[b.N, b.center, b.lower, b.upper, b.width] for b in infos]
    path = _emit(cfg, "", BANDS_COLUMNS, rows, json_rows)
    _write_metadata(path, cfg, "bands", time.perf_counter() - t0)
    return EXIT_OK


def cmd_rabi(args) -> int:
    cfg = _config(args)
    t0 = time.perf_counter()
    r = cfg.rabi
    lams = np.linspace(r["lambda_lo"], r["lambda_hi"], r["lambda_count"]) if r["lambda_count"] else []
    rows, json_rows = [], []
    for lam in lams:
        rp = RabiParams(omega=cfg.params.omega, Omega=cfg.params.Omega, lam=float(lam))
        spectra = {name: fn(rp, r["n_levels"]).levels for name, fn in RABI_METHODS.items()}
        for i in range(r["n_levels"]):
            vals = [spectra[name][i] for name in RABI_METHODS]
            rows.append([fmt(lam), str(i), *map(fmt, vals)])
            json_rows.append([float(lam), i, *map(float, vals)])
    path = _emit(cfg, "", RABI_COLUMNS, rows, json_rows)
    _write_metadata(path, cfg, "rabi", time.perf_counter() - t0)
    return EXIT_OK


def cmd_validate(args) -> int:
    level = "quick" if args.quick else "full"
    t0 = time.perf_counter()
    results = run_validate(level, args.inject_fault)
    report = {
        "level": level,
        "version": __version__,
        "passed": all(r.passed for r in results),
        "seconds": round(time.perf_counter() - t0, 3),
        "checks": [r.as_dict() for r in results],
    }
    text = json.dumps(report, indent=1) + "\n"
    if args.out:
        out = Path(args.out)
        out = out if out.is_absolute() else output_dir() / out
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name}: {r.value:.3g} (limit {r.threshold:.3g}) {r.detail}".rstrip(),
              file=sys.stderr)
    return EXIT_OK if report["passed"] else EXIT_VALIDATION


def cmd_presets(args) -> int:
    for name in preset_names():
        p = PRESETS[name]
        m = p["model"]
        print(f"{name}  omega={m['omega']:g} xi={m['xi']:g} Omega={m['Omega']:g} lambda={m['lambda']:g}"
              f"  methods={','.join(p['methods'])}  # {p['description']}")
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="YAML run configuration")
    p.add_argument("--preset", metavar="NAME", help="named parameter set (see 'grwa presets')")
    p.add_argument("--out", metavar="PATH", help="output file; relative paths go under $GRWA_OUTPUT_DIR")
    p.add_argument("--format", choices=("csv", "json"), help="data file format (default csv)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grwa", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="reflection/transmission amplitudes on a k grid")
    _add_common(p)
    p.add_argument("--method", metavar="LIST", help="comma-separated methods")
    p.add_argument("--k-points", type=int, metavar="N", help="number of grid midpoints in the k range")
    p.add_argument("--cp", type=int, choices=(2, 3), help="excitation cutoff for the numeric method")
    p.add_argument("--chain-length", type=int, metavar="L", help="sites in the numeric chain (odd)")
    p.add_argument("--jobs", type=int, metavar="N", help="worker threads (default: all cores)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("alpha", help="displacement amplitudes alpha_j")
    _add_common(p)
    p.set_defaults(func=cmd_alpha)

    p = sub.add_parser("bands", help="N-photon band centers and edges")
    _add_common(p)
    p.add_argument("--max-n", type=int, metavar="N", help="largest photon number")
    p.set_defaults(func=cmd_bands)

    p = sub.add_parser("rabi", help="single-mode Rabi spectra for four treatments")
    _add_common(p)
    p.set_defaults(func=cmd_rabi)

    p = sub.add_parser("validate", help="run the invariant suite")
    p.add_argument("--quick", action="store_true", help="skip the three-excitation numeric checks")
    p.add_argument("--out", metavar="PATH", help="write the JSON report here instead of stdout")
    p.add_argument("--inject-fault", choices=FAULTS, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("presets", help="list named parameter sets")
    p.set_defaults(func=cmd_presets)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParameterError) as exc:
        print(f"grwa: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"grwa: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
