"""``sdchain`` command line: sweeps written as CSV/JSON plus a metadata sidecar.

Exit codes: 0 ok, 1 invalid configuration, 2 engine guard violation,
3 solver failure (non-convergence or no T* bracket).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, analysis, ed
from .model import Boundary, ChainSpec

log = logging.getLogger("sdchain")

COMMANDS = ("gs-conc", "thermal-conc", "tstar", "fit-eta", "equiv-check")

DEFAULTS = {
    "n": "8,12,16",
    "alpha": "2",
    "delta": "0",
    "j": "1",
    "boundary": "open-deformed",
    "t": "0.001,0.01,0.1,1",
    "engine": "auto",
    "format": "csv",
    "threads": "auto",
    "t_hint": "",
}

GS_HEADER = ["n_sites", "alpha", "delta", "temperature", "m", "cx", "cz", "concurrence"]


class ConfigError(ValueError):
    pass


def read_config_file(path: str | os.PathLike) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "n_sites":
            key = "n"
        if key not in DEFAULTS and key not in ("command", "output"):
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def _floats(text: str, name: str) -> list[float]:
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"{name}: expected comma-separated numbers, got {text!r}") from None


def _ints(text: str, name: str) -> list[int]:
    vals = _floats(text, name)
    if any(v != int(v) for v in vals):
        raise ConfigError(f"{name}: expected integers, got {text!r}")
    return [int(v) for v in vals]


def _threads(value: str) -> int:
    env = os.environ.get("SDCHAIN_THREADS")
    if env:
        value = env
    if str(value).strip().lower() in ("", "auto"):
        return os.cpu_count() or 1
    try:
        n = int(value)
    except ValueError:
        raise ConfigError(f"threads: expected an integer or 'auto', got {value!r}") from None
    if n < 1:
        raise ConfigError("threads must be >= 1")
    return n


def resolve_config(command: str, file_values: dict[str, str], flags: dict[str, str | None]) -> dict:
    """Merge defaults < config file < flags and parse every field."""
    raw = dict(DEFAULTS)
    raw.update(file_values)
    raw.update({k: v for k, v in flags.items() if v is not None})
    if raw.get("command") and raw["command"] != command:
        raise ConfigError(f"config file is for {raw['command']!r}, not {command!r}")
    cfg = {
        "command": command,
        "n": _ints(raw["n"], "n"),
        "alpha": _floats(raw["alpha"], "alpha"),
        "delta": _floats(raw["delta"], "delta")[0] if raw["delta"] else 0.0,
        "j": _floats(raw["j"], "j")[0],
        "boundary": Boundary.parse(raw["boundary"]).value,
        "t": _floats(raw["t"], "t"),
        "engine": analysis.Engine.parse(raw["engine"]).value,
        "format": raw["format"].lower(),
        "threads": _threads(raw["threads"]),
        "t_hint": _floats(raw["t_hint"], "t_hint")[0] if raw["t_hint"] else None,
        "output": raw.get("output"),
    }
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {cfg['format']!r}")
    if not cfg["n"] or not cfg["alpha"]:
        raise ConfigError("n and alpha lists must be non-empty")
    if len(set(cfg["n"])) != len(cfg["n"]):
        raise ConfigError("n contains duplicates")
    # validate every model instance up front
    for n in cfg["n"]:
        for a in cfg["alpha"]:
            ChainSpec(n, a, cfg["delta"], cfg["j"], cfg["boundary"])
    return cfg


# ---------------------------------------------------------------------------
# commands; each returns (header, rows, extra-metadata)


def _spec(cfg, n, alpha) -> ChainSpec:
    return ChainSpec(n, alpha, cfg["delta"], cfg["j"], cfg["boundary"])


def cmd_gs_conc(cfg):
    rows, engines = [], []
    for alpha in cfg["alpha"]:
        res = analysis.gs_concurrence_vs_n(
            alpha, cfg["delta"], cfg["n"], cfg["engine"], cfg["j"], cfg["threads"], cfg["boundary"]
        )
        rows += res.rows
        engines += res.notes["engines"]
    return GS_HEADER, rows, {"engines": engines}


def cmd_thermal_conc(cfg):
    temps = sorted(cfg["t"])
    rows, meta = [], {"curves": []}
    for alpha in cfg["alpha"]:
        for n in cfg["n"]:
            res = analysis.thermal_concurrence_curve(_spec(cfg, n, alpha), temps, cfg["engine"], cfg["threads"])
            rows += res.rows
            meta["curves"].append({"n_sites": n, "alpha": alpha, **res.notes})
    return GS_HEADER, rows, meta


TSTAR_HEADER = ["n_sites", "alpha", "delta", "tstar", "bracket_lo", "bracket_hi", "g_at_tstar", "n_crossings", "engine"]


def _tstar_row(cfg, n, alpha):
    spec = _spec(cfg, n, alpha)
    hint = cfg["t_hint"] or max(np.sin(np.pi / n) ** alpha, 1e-12)
    r = analysis.locate_tstar(spec, cfg["engine"], hint)
    return {
        "n_sites": n, "alpha": alpha, "delta": spec.delta, "tstar": r.tstar,
        "bracket_lo": r.bracket[0], "bracket_hi": r.bracket[1], "g_at_tstar": r.g_at_tstar,
        "n_crossings": len(r.crossings), "engine": r.engine,
    }


def cmd_tstar(cfg):
    rows = [_tstar_row(cfg, n, a) for a in cfg["alpha"] for n in cfg["n"]]
    return TSTAR_HEADER, rows, {}


FIT_HEADER = ["alpha", "delta", "n_sites", "tstar", "residual", "amplitude_a", "exponent_eta", "r_squared"]


def cmd_fit_eta(cfg):
    rows, fits = [], []
    for alpha in cfg["alpha"]:
        pts = [(n, _tstar_row(cfg, n, alpha)["tstar"]) for n in cfg["n"]]
        fit = analysis.fit_power_law(pts)
        fits.append({"alpha": alpha, "amplitude_a": fit.amplitude_a, "exponent_eta": fit.exponent_eta, "r_squared": fit.r_squared})
        for (n, t), res in zip(fit.points, fit.residuals):
            rows.append({
                "alpha": alpha, "delta": cfg["delta"], "n_sites": n, "tstar": t, "residual": res,
                "amplitude_a": fit.amplitude_a, "exponent_eta": fit.exponent_eta, "r_squared": fit.r_squared,
            })
    return FIT_HEADER, rows, {"fits": fits}


EQUIV_HEADER = ["n_sites", "delta", "engine", "sector", "deformed_cx", "deformed_cz", "ring_cx", "ring_cz", "diff_cx", "diff_cz", "matching"]


def cmd_equiv_check(cfg):
    rows = []
    for n in cfg["n"]:
        rep = analysis.equivalence_check(n, cfg["delta"], cfg["engine"])
        for c in rep.comparisons:
            rows.append({
                "n_sites": n, "delta": rep.delta, "engine": rep.engine, "sector": c.sector,
                "deformed_cx": rep.deformed_cx, "deformed_cz": rep.deformed_cz, "ring_cx": c.cx, "ring_cz": c.cz,
                "diff_cx": c.diff_cx, "diff_cz": c.diff_cz, "matching": c.sector == rep.matching_sector,
            })
    return EQUIV_HEADER, rows, {}


HANDLERS = {
    "gs-conc": cmd_gs_conc,
    "thermal-conc": cmd_thermal_conc,
    "tstar": cmd_tstar,
    "fit-eta": cmd_fit_eta,
    "equiv-check": cmd_equiv_check,
}


# ---------------------------------------------------------------------------
# serialization


def _as_dict(row, header) -> dict:
    if isinstance(row, dict):
        return {k: row[k] for k in header}
    return {k: getattr(row, k) for k in header}


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def render(header, rows, fmt: str, meta: dict | None = None) -> str:
    dicts = [_as_dict(r, header) for r in rows]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for d in dicts:
            writer.writerow([_fmt(d[k]) for k in header])
        return buf.getvalue()
    clean = [{k: (float(v) if isinstance(v, np.floating) else v) for k, v in d.items()} for d in dicts]
    return json.dumps({"rows": clean, "meta": meta or {}}, indent=2, sort_keys=False) + "\n"


def run(cfg: dict) -> tuple[str, dict]:
    """Execute one resolved configuration; returns (data payload, metadata)."""
    start = time.perf_counter()
    header, rows, extra = HANDLERS[cfg["command"]](cfg)
    # data payload carries only deterministic content
    data_meta = {"command": cfg["command"], "engine_requested": cfg["engine"], **extra}
    payload = render(header, rows, cfg["format"], data_meta)
    meta = {
        "config": {k: v for k, v in cfg.items()},
        "engine_requested": cfg["engine"],
        **extra,
        "tolerances": {
            "lanczos_residual": "1e-10 * Gershgorin scale (1e-13 for alpha >= 3.5)",
            "tstar_relative_bracket": analysis.TSTAR_REL_WIDTH,
            "zero_mode": 1e-12,
        },
        "units": {"temperature": "k_B T / J", "energy": "J"},
        "seed": os.environ.get("SDCHAIN_SEED"),
        "wall_time_s": time.perf_counter() - start,
        "version": __version__,
    }
    return payload, meta


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sdchain", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value file; flags take precedence")
        p.add_argument("--n", help="comma-separated chain lengths")
        p.add_argument("--alpha", help="comma-separated deformation exponents")
        p.add_argument("--delta")
        p.add_argument("--j")
        p.add_argument("--boundary", choices=[b.value for b in Boundary])
        p.add_argument("--t", help="comma-separated temperatures k_B T / J")
        p.add_argument("--t-hint", dest="t_hint")
        p.add_argument("--engine", choices=[e.value for e in analysis.Engine])
        p.add_argument("--format", choices=["csv", "json"])
        p.add_argument("--threads")
        p.add_argument("-o", "--output", help="data file; a .meta.json sidecar is written next to it")
    v = sub.add_parser("validate", help="run the acceptance checks")
    v.add_argument("--only", help="comma-separated criterion keys, e.g. 1,3,P")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")

    if args.command == "validate":
        from .validation import CRITERIA, validate_suite

        keys = None
        if args.only:
            keys = [k.strip() for k in args.only.split(",") if k.strip()]
            unknown = set(keys) - set(CRITERIA)
            if unknown:
                print(f"error: unknown criteria {sorted(unknown)}", file=sys.stderr)
                return 1
        results = validate_suite(keys)
        return 0 if all(r.passed for r in results) else 1

    try:
        file_values = read_config_file(args.config) if args.config else {}
        flags = {k: getattr(args, k) for k in DEFAULTS if hasattr(args, k)}
        flags["output"] = args.output
        cfg = resolve_config(args.command, file_values, flags)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    try:
        payload, meta = run(cfg)
    except analysis.EngineGuardError as exc:
        print(f"engine guard: {exc}", file=sys.stderr)
        return 2
    except (ed.ConvergenceError, analysis.BracketNotFoundError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if cfg["output"]:
        out = Path(cfg["output"])
        out.write_text(payload)
        out.with_name(out.name + ".meta.json").write_text(json.dumps(meta, indent=2, default=str) + "\n")
    else:
        sys.stdout.write(payload)
    return 0


if __name__ == "__main__":
    sys.exit(main())
