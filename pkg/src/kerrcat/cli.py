"""Command-line interface: batch artifacts for the cat, fidelity, scaling,
and Bell experiments.

Every command writes its data file plus a sibling ``<output>.manifest.json``
carrying the resolved configuration, tool version, wall-clock duration, and
the Fock cutoffs actually used.  Data files contain no timestamps, so exact-
mode reruns with the same configuration are bit-identical.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 no Bell violation at zero phase error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    NoCrossingError,
    NoViolationError,
    chsh_pipeline,
    fidelity_exact,
    fidelity_fock,
    fidelity_gaussian,
    fit_scaling,
    gaussian_half_width,
    half_width,
)
from .fock import (
    CoherentSuperposition,
    CutoffError,
    CutoffPolicy,
    choose_cutoff,
    coherent_fock,
    inner_product,
    photon_number_distribution,
)
from .measure import DiscriminationSetup, qubit_measure, sample
from .ops import kerr_closed_form, kerr_evolve
from .qubit import encode

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_NO_VIOLATION = 4


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


def _fmt(x: float) -> str:
    """Full-precision scientific notation (17 significant digits)."""
    return f"{float(x):.16e}"


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([c if isinstance(c, str) else _fmt(c) for c in row])


def _write_json(path: Path, obj: dict) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(output: Path, command: str, config: dict, duration: float, cutoffs: dict) -> None:
    _write_json(
        Path(str(output) + ".manifest.json"),
        {
            "schema_version": SCHEMA_VERSION,
            "tool": "kerrcat",
            "tool_version": __version__,
            "command": command,
            "config": config,
            "duration_seconds": duration,
            "cutoffs": cutoffs,
            "created": datetime.now(timezone.utc).isoformat(),
        },
    )


def _parse_list(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise ConfigError(f"bad list {text!r}: {exc}") from exc
    if not values:
        raise ConfigError("empty list")
    return values


def _grid(lo, hi, steps) -> np.ndarray:
    if steps < 2:
        raise ConfigError("grid needs steps >= 2")
    if not hi > lo:
        raise ConfigError("grid needs max > min")
    return np.linspace(lo, hi, int(steps))


#: Sentinel marking a setting that must come from a flag or the config file.
REQUIRED = object()


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """Merge config-file values and flags; flags win, then file, then defaults."""
    file_cfg = {}
    if args.config is not None:
        try:
            file_cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(file_cfg) - set(defaults)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    resolved = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        if flag is not None:
            resolved[key] = flag
        elif key in file_cfg:
            resolved[key] = file_cfg[key]
        else:
            resolved[key] = None if default is REQUIRED else default
    missing = [k for k, v in resolved.items() if v is None and defaults[k] is REQUIRED]
    if missing:
        raise ConfigError(f"missing required settings: {missing}")
    return resolved


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_cat(args) -> int:
    cfg = _resolve(args, {"alpha": REQUIRED, "phi": math.pi / 2, "output": "cat.csv",
                          "format": "csv"})
    alpha, phi = float(cfg["alpha"]), float(cfg["phi"])
    if alpha <= 0:
        raise ConfigError("alpha must be positive")
    start = time.perf_counter()
    amp = math.sqrt(2.0) * alpha
    n_max = choose_cutoff(CutoffPolicy(amp * amp))
    state = kerr_evolve(coherent_fock(amp, n_max), phi)
    dist = photon_number_distribution(state)
    fid = None
    try:
        oracle = kerr_closed_form(CoherentSuperposition(((1.0, (amp,)),)), phi)
        fid = float(abs(inner_product(oracle.to_fock(n_max), state)) ** 2)
    except ValueError:
        pass  # phi is not a multiple of pi/2; no closed-form oracle exists
    output = Path(cfg["output"])
    summary = {"alpha": alpha, "phi": phi, "n_max": n_max,
               "fidelity_vs_oracle": fid, "mean_photons": float(np.arange(dist.size) @ dist)}
    if cfg["format"] == "csv":
        _write_csv(output, ["n", "probability"], [(float(n), p) for n, p in enumerate(dist)])
        _write_json(Path(str(output) + ".summary.json"), summary)
    else:
        _write_json(output, {"summary": summary, "distribution": [float(p) for p in dist]})
    _write_manifest(output, "cat", cfg, time.perf_counter() - start, {"n_max": n_max})
    return EXIT_OK


def cmd_fidelity_sweep(args) -> int:
    cfg = _resolve(args, {"n_list": "30,50,100", "phi_min": -2e-3, "phi_max": 2e-3,
                          "steps": 201, "output": "fidelity_sweep.csv", "format": "csv"})
    n_list = _parse_list(cfg["n_list"]) if isinstance(cfg["n_list"], str) else tuple(cfg["n_list"])
    grid = _grid(float(cfg["phi_min"]), float(cfg["phi_max"]), int(cfg["steps"]))
    start = time.perf_counter()
    rows = []
    max_fock_gap = 0.0
    for n_mean in sorted(n_list):
        alpha = math.sqrt(n_mean / 2.0)
        for phi_t in grid:
            exact = fidelity_exact(n_mean, float(phi_t))
            fock = fidelity_fock(alpha, math.pi / 2 + float(phi_t))
            max_fock_gap = max(max_fock_gap, abs(exact - fock))
            rows.append((n_mean, float(phi_t), exact, fock, fidelity_gaussian(n_mean, float(phi_t))))
    # Ordering check: larger N gives the lower (narrower) curve at every
    # nonzero grid point.
    ordered = True
    ns = sorted(set(n_list))
    for phi_t in grid:
        if abs(phi_t) < 1e-15:
            continue
        vals = [fidelity_exact(n, float(phi_t)) for n in ns]
        if any(vals[i + 1] >= vals[i] for i in range(len(vals) - 1)):
            ordered = False
    output = Path(cfg["output"])
    summary = {"n_values": list(ns), "grid_points": int(grid.size),
               "ordering_holds": ordered, "max_exact_fock_gap": max_fock_gap}
    header = ["N", "phi_tilde", "fidelity_exact", "fidelity_fock", "fidelity_gaussian"]
    if cfg["format"] == "csv":
        _write_csv(output, header, rows)
        _write_json(Path(str(output) + ".summary.json"), summary)
    else:
        _write_json(output, {"summary": summary, "columns": header,
                             "rows": [[float(c) for c in row] for row in rows]})
    cutoffs = {str(int(n)): choose_cutoff(CutoffPolicy(float(n))) for n in ns}
    _write_manifest(output, "fidelity-sweep", cfg, time.perf_counter() - start, cutoffs)
    return EXIT_OK


def cmd_scaling(args) -> int:
    cfg = _resolve(args, {"n_list": "20,30,50,100,200", "gaussian": False,
                          "output": "scaling.csv", "format": "csv"})
    n_list = _parse_list(cfg["n_list"]) if isinstance(cfg["n_list"], str) else tuple(cfg["n_list"])
    start = time.perf_counter()
    if cfg["gaussian"]:
        widths = tuple(gaussian_half_width(n) for n in sorted(n_list))
        evaluator = lambda n, p: fidelity_gaussian(n, p)  # noqa: E731
        fit = fit_scaling(sorted(n_list), evaluator=evaluator)
    else:
        fit = fit_scaling(sorted(n_list))
        widths = fit.half_widths
    rows = list(zip(sorted(n_list), widths))
    output = Path(cfg["output"])
    summary = {"exponent": fit.exponent, "intercept": fit.intercept,
               "residual": fit.residual, "gaussian": bool(cfg["gaussian"])}
    if cfg["format"] == "csv":
        _write_csv(output, ["N", "half_width"], rows)
        _write_json(Path(str(output) + ".summary.json"), summary)
    else:
        _write_json(output, {"summary": summary,
                             "rows": [[float(n), float(w)] for n, w in rows]})
    cutoffs = {str(int(n)): choose_cutoff(CutoffPolicy(float(n))) for n in sorted(n_list)}
    _write_manifest(output, "scaling", cfg, time.perf_counter() - start, cutoffs)
    return EXIT_OK


def cmd_bell(args) -> int:
    cfg = _resolve(args, {"alpha": 2.5, "delta_phi_min": 0.0, "delta_phi_max": None,
                          "delta_phi_steps": 9, "mode": "exact", "seed": None,
                          "shots": None, "output": "bell.csv", "format": "csv"})
    alpha = float(cfg["alpha"])
    hi = cfg["delta_phi_max"]
    if hi is None:
        hi = 2.0 / (2.0 * alpha**2) ** 1.5
    mode = cfg["mode"]
    if mode not in ("exact", "sampled"):
        raise ConfigError("mode must be exact or sampled")
    if mode == "sampled" and (cfg["seed"] is None or cfg["shots"] is None):
        raise ConfigError("sampled mode needs --seed and --shots")
    grid = _grid(float(cfg["delta_phi_min"]), float(hi), int(cfg["delta_phi_steps"]))
    start = time.perf_counter()
    kwargs = {"mode": mode}
    if mode == "sampled":
        kwargs.update(seed=int(cfg["seed"]), shots=int(cfg["shots"]))
    rows = []
    s_values = []
    for delta in grid:
        res = chsh_pipeline(alpha, phase_error=float(delta), **kwargs)
        s_values.append(res.s_value)
        rows.append((float(delta), res.s_value, res.discard_fraction) + res.correlations)
    s_zero = s_values[0] if abs(grid[0]) < 1e-15 else chsh_pipeline(alpha, **kwargs).s_value
    crossing = None
    for i in range(len(grid) - 1):
        if s_values[i] >= 2.0 > s_values[i + 1]:
            frac = (s_values[i] - 2.0) / (s_values[i] - s_values[i + 1])
            crossing = float(grid[i] + frac * (grid[i + 1] - grid[i]))
            break
    output = Path(cfg["output"])
    summary = {"alpha": alpha, "mode": mode, "s_at_zero": float(s_zero),
               "violation_at_zero": bool(s_zero > 2.0), "s2_crossing": crossing}
    header = ["delta_phi", "S", "discard_fraction", "E1", "E2", "E3", "E4"]
    if cfg["format"] == "csv":
        _write_csv(output, header, rows)
        _write_json(Path(str(output) + ".summary.json"), summary)
    else:
        _write_json(output, {"summary": summary, "columns": header,
                             "rows": [[float(c) for c in row] for row in rows]})
    n_max = choose_cutoff(CutoffPolicy(2.0 * alpha**2))
    _write_manifest(output, "bell", cfg, time.perf_counter() - start, {"n_max": n_max})
    if s_zero <= 2.0:
        print(f"no violation at delta_phi = 0 (S = {s_zero:.4f})", file=sys.stderr)
        return EXIT_NO_VIOLATION
    return EXIT_OK


def cmd_measure_demo(args) -> int:
    cfg = _resolve(args, {"alpha": 3.0, "threshold": None, "mode": "exact",
                          "seed": None, "shots": None, "output": "measure_demo.csv",
                          "format": "csv"})
    alpha = float(cfg["alpha"])
    threshold = None if cfg["threshold"] is None else int(cfg["threshold"])
    mode = cfg["mode"]
    if mode == "sampled" and (cfg["seed"] is None or cfg["shots"] is None):
        raise ConfigError("sampled mode needs --seed and --shots")
    start = time.perf_counter()
    setup = DiscriminationSetup(alpha, threshold)
    from .qubit import QubitEncoding

    enc = QubitEncoding(alpha)
    n_max = enc.default_cutoff()
    rows = []
    records = {}
    for label, bit in (("plus_alpha", 0), ("minus_alpha", 1)):
        dist = qubit_measure(encode(bit, enc, n_max), setup)
        rows.append((label,) + dist.as_tuple())
        if mode == "sampled":
            rec = sample(dist, int(cfg["seed"]), int(cfg["shots"]))
            records[label] = {"counts": list(rec.counts), "shots": rec.shots}
    output = Path(cfg["output"])
    summary = {"alpha": alpha, "threshold": setup.resolved_threshold, "mode": mode}
    if records:
        summary["shot_records"] = records
    if cfg["format"] == "csv":
        _write_csv(output, ["input", "p_plus", "p_minus", "p_inconclusive"], rows)
        _write_json(Path(str(output) + ".summary.json"), summary)
    else:
        _write_json(output, {"summary": summary,
                             "rows": [[r[0]] + [float(c) for c in r[1:]] for r in rows]})
    _write_manifest(output, "measure-demo", cfg, time.perf_counter() - start,
                    {"n_max": n_max})
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kerrcat",
        description="Kerr cat states, entangled coherent states, and the CHSH "
                    "phase-precision experiment.",
    )
    parser.add_argument("--version", action="version", version=f"kerrcat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; explicit flags override it")
        p.add_argument("--output", help="output data file path")
        p.add_argument("--format", choices=("csv", "json"), help="output format")

    p = sub.add_parser("cat", help="Kerr-evolved coherent state and its cat fidelity")
    p.add_argument("--alpha", type=float)
    p.add_argument("--phi", type=float)
    common(p)
    p.set_defaults(func=cmd_cat)

    p = sub.add_parser("fidelity-sweep", help="exact/Fock/Gaussian fidelity curves")
    p.add_argument("--n-list", dest="n_list")
    p.add_argument("--phi-min", dest="phi_min", type=float)
    p.add_argument("--phi-max", dest="phi_max", type=float)
    p.add_argument("--steps", type=int)
    common(p)
    p.set_defaults(func=cmd_fidelity_sweep)

    p = sub.add_parser("scaling", help="half-width power-law fit over N")
    p.add_argument("--n-list", dest="n_list")
    p.add_argument("--gaussian", action="store_const", const=True, default=None,
                   help="use the closed-form Gaussian half-widths")
    common(p)
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("bell", help="CHSH value over a phase-error grid")
    p.add_argument("--alpha", type=float)
    p.add_argument("--delta-phi-min", dest="delta_phi_min", type=float)
    p.add_argument("--delta-phi-max", dest="delta_phi_max", type=float)
    p.add_argument("--delta-phi-steps", dest="delta_phi_steps", type=int)
    p.add_argument("--mode", choices=("exact", "sampled"))
    p.add_argument("--seed", type=int)
    p.add_argument("--shots", type=int)
    common(p)
    p.set_defaults(func=cmd_bell)

    p = sub.add_parser("measure-demo", help="bright/vacuum discrimination of |+alpha>, |-alpha>")
    p.add_argument("--alpha", type=float)
    p.add_argument("--threshold", type=int)
    p.add_argument("--mode", choices=("exact", "sampled"))
    p.add_argument("--seed", type=int)
    p.add_argument("--shots", type=int)
    common(p)
    p.set_defaults(func=cmd_measure_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoViolationError as exc:
        print(f"no violation: {exc}", file=sys.stderr)
        return EXIT_NO_VIOLATION
    except (CutoffError, NoCrossingError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
