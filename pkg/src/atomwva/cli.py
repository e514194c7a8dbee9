"""Command line front end: ``atomwva validate|run|sweep|detect``.

Exit codes are the same for every subcommand: 0 on success, 1 when the
physics refuses (regime failure, impossible post-selection, unconverged
cutoff, ...), 2 for usage and configuration errors.

Without ``--format`` the result is printed as a short human summary with
six significant digits.  ``--format json`` and ``--format csv`` write
machine records with 17 significant digits.  When only ``--out`` is given
the format follows its suffix.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import experiment as ex
from .config import ENGINES, ConfigError, RunConfig, dumps, load
from .errors import WVAError

EXIT_OK = 0
EXIT_PHYSICS = 1
EXIT_USAGE = 2

MAX_SEED = 2 ** 64 - 1


# ---------------------------------------------------------------------------
# Formatting
# ---------------------------------------------------------------------------

def _clean(obj):
    """Replace non-finite floats by ``None`` and tuples by lists."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return _clean(obj.item())
    return obj


def _num(v, digits: int) -> str:
    if isinstance(v, bool) or not isinstance(v, float):
        return str(v)
    return f"{v:.{digits}g}"


def to_json(obj) -> str:
    """JSON text with every float written to 17 significant digits."""

    def enc(o, indent):
        pad = "  " * (indent + 1)
        end = "  " * indent
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(k)}: {enc(v, indent + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, list):
            if not o:
                return "[]"
            if all(not isinstance(v, (dict, list)) for v in o):
                return "[" + ", ".join(enc(v, indent) for v in o) + "]"
            return "[\n" + ",\n".join(pad + enc(v, indent + 1) for v in o) + "\n" + end + "]"
        if isinstance(o, float):
            return f"{o:.17g}"
        return json.dumps(o)

    return enc(_clean(obj), 0) + "\n"


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "_"))
        elif isinstance(v, list) and all(not isinstance(x, (dict, list)) for x in v):
            for i, x in enumerate(v):
                out[f"{key}_{i}"] = x
        elif not isinstance(v, list):
            out[key] = v
    return out


def to_csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        row = _clean(row)
        w.writerow(["" if row.get(c) is None else _num(row.get(c), 17) for c in columns])
    return buf.getvalue()


def _human(d: dict, indent: int = 0) -> str:
    lines = []
    pad = "  " * indent
    for k, v in _clean(d).items():
        if isinstance(v, dict):
            lines.append(f"{pad}{k}:")
            lines.append(_human(v, indent + 1))
        elif isinstance(v, list) and v and isinstance(v[0], dict):
            lines.append(f"{pad}{k}:")
            for item in v:
                lines.append(pad + "  - " + ", ".join(f"{a}={_num(b, 6)}" for a, b in item.items()))
        elif isinstance(v, list):
            lines.append(f"{pad}{k}: [" + ", ".join(_num(x, 6) for x in v) + "]")
        else:
            lines.append(f"{pad}{k}: {_num(v, 6)}")
    return "\n".join(lines)


def _human_validate(report: ex.ValidationReport) -> str:
    lines = [f"{'ratio':<22}{'value':>14}  status  meaning"]
    for f in report.flags:
        lines.append(f"{f.name:<22}{f.ratio:>14.6g}  {f.status:<6}  {f.message}")
    c = report.couplings
    lines.append("")
    lines.append(f"Omega x_c / 2pi = {c.Omega_xc / (2 * math.pi):.6g} Hz")
    lines.append(f"g0 / 2pi        = {c.g0 / (2 * math.pi):.6g} Hz")
    lines.append(f"g0 t            = {c.g0_t:.6g}")
    lines.append(f"g_c             = {c.g_c:.6g}")
    if report.weak_value is not None:
        lines.append(f"A_w             = {report.weak_value.real:.6g} {report.weak_value.imag:+.6g}i")
        lines.append(f"P               = {report.probability:.6g}")
    if report.error:
        lines.append(f"error: {report.error}")
    lines.append(f"overall: {report.status}")
    return "\n".join(lines)


def _human_sweep(rows) -> str:
    cols = [c for c in ex.SWEEP_COLUMNS if c != "parameter"]
    out = [f"sweep over {rows[0]['parameter']}" if rows else "empty sweep", "  ".join(cols)]
    for row in _clean(rows):
        out.append("  ".join("" if row[c] is None else _num(row[c], 6) for c in cols))
    return "\n".join(out)


# ---------------------------------------------------------------------------
# Argument handling
# ---------------------------------------------------------------------------

def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text!r}") from None
    if not 0 <= v <= MAX_SEED:
        raise argparse.ArgumentTypeError(f"seed must be in [0, 2^64 - 1], got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="atomwva",
        description="Weak-value amplification of the atom-vacuum interaction: "
                    "regime checks, single runs, sweeps and detector Monte Carlo.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI configuration file (defaults apply when omitted)")
    common.add_argument("--out", type=Path, help="write the result here instead of standard output")
    common.add_argument("--format", choices=("csv", "json"), help="machine-readable output format")
    common.add_argument("--seed", type=_seed, help="top-level random seed (unsigned 64-bit)")
    common.add_argument("--engine", choices=ENGINES, help="override the configured engine")
    common.add_argument("--dump-config", action="store_true",
                        help="print the resolved configuration and exit without running")
    common.add_argument("--workers", type=int, default=1, help="parallel sweep points (results keep sweep order)")
    common.add_argument("--samples", type=Path, help="detect: also write per-trial signals to this CSV file")

    sub.add_parser("validate", parents=[common], help="report every regime ratio with pass/warn/fail status")
    sub.add_parser("run", parents=[common], help="one end-to-end run with the configured engine")
    sub.add_parser("sweep", parents=[common], help="run the [sweep] section, one row per point")
    sub.add_parser("detect", parents=[common], help="Monte Carlo detector statistics (needs a seed)")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = load(args.config) if args.config is not None else RunConfig()
    if args.engine is not None:
        cfg = replace(cfg, engine=args.engine)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _format(args) -> str:
    if args.format:
        return args.format
    if args.out is not None:
        return "csv" if args.out.suffix.lower() == ".csv" else "json"
    return "human"


def _emit(text: str, args) -> None:
    if args.out is not None:
        args.out.write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_validate(cfg: RunConfig, args) -> int:
    report = ex.validate(cfg)
    fmt = _format(args)
    if fmt == "json":
        _emit(to_json(report.as_dict()), args)
    elif fmt == "csv":
        rows = [_flag_row(f) for f in report.flags]
        _emit(to_csv(rows, ("name", "ratio", "status", "message")), args)
    else:
        _emit(_human_validate(report), args)
    return EXIT_PHYSICS if report.status == "fail" else EXIT_OK


def _flag_row(f):
    return {"name": f.name, "ratio": f.ratio, "status": f.status, "message": f.message}


def _require_valid(cfg: RunConfig) -> None:
    report = ex.validate(cfg)
    if report.status == "fail":
        bad = [f"{f.name} = {f.ratio:.3g}" for f in report.flags if f.status == "fail"]
        reason = report.error or "regime check failed: " + ", ".join(bad)
        raise WVAError(reason + " (run 'validate' for the full report)")


def cmd_run(cfg: RunConfig, args) -> int:
    _require_valid(cfg)
    record = ex.run_single(cfg)
    fmt = _format(args)
    if fmt == "json":
        _emit(to_json(record), args)
    elif fmt == "csv":
        row = {
            "parameter": "", "value": None,
            "re_weak_value": record["weak_value"]["re"],
            "im_weak_value": record["weak_value"]["im"],
            "probability": record["probability_actual"],
            "g0_over_2pi": record["couplings"]["g0_over_2pi"],
            "g_c": record["couplings"]["g_c"],
            "predicted_p_shift": record["predicted"]["p_shift"],
            "predicted_x_shift": record["predicted"]["x_shift"],
            "measured_p_shift": record["measured"]["p_shift"],
            "measured_x_shift": record["measured"]["x_shift"],
            "s_bar": record["detector"]["s_bar"],
            "status": record["regime_status"],
            "error": "",
        }
        _emit(to_csv([row], ex.SWEEP_COLUMNS), args)
    else:
        _emit(_human(record), args)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args) -> int:
    if cfg.sweep is None:
        raise ConfigError("sweep needs a [sweep] section in the configuration")
    rows = ex.run_sweep(cfg, workers=max(1, args.workers))
    fmt = _format(args)
    if fmt == "json":
        _emit(to_json({"columns": list(ex.SWEEP_COLUMNS), "rows": rows}), args)
    elif fmt == "csv":
        _emit(to_csv(rows, ex.SWEEP_COLUMNS), args)
    else:
        _emit(_human_sweep(rows), args)
    return EXIT_OK


def cmd_detect(cfg: RunConfig, args) -> int:
    if cfg.detector is None:
        raise ConfigError("detect needs a [detector] section in the configuration")
    if cfg.seed is None:
        raise ConfigError("detect needs a seed: set [detector] seed or pass --seed")
    _require_valid(cfg)
    report = ex.run_detect(cfg, include_samples=args.samples is not None)
    samples = report.pop("samples", None)
    if samples is not None:
        args.samples.write_text(to_csv([{"trial": k, "s": s} for k, s in enumerate(samples)], ("trial", "s")))
    fmt = _format(args)
    if fmt == "json":
        _emit(to_json(report), args)
    elif fmt == "csv":
        flat = _flatten(report)
        _emit(to_csv([flat], list(flat)), args)
    else:
        _emit(_human(report), args)
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "run": cmd_run, "sweep": cmd_sweep, "detect": cmd_detect}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = resolve_config(args)
        if args.dump_config:
            _emit(dumps(cfg), args)
            return EXIT_OK
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"atomwva: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (WVAError, ValueError) as exc:
        print(f"atomwva: {args.command} failed: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except OSError as exc:
        print(f"atomwva: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
