"""Batch experiment runner for parameter sweeps.

Experiments are described by INI config files and dispatched to the
library modules; results are written as CSV (UTF-8, '.' decimal,
scientific notation with 17 significant digits) or JSON, plus a
``.meta.json`` sidecar echoing the config, library version, and wall
time.  Identical config and seed produce byte-identical data files;
only the sidecar's timestamp/walltime fields may differ.

Config grammar::

    [experiment]
    name = convergence-coherent   ; one of the registered experiments
    seed = 0x55355243             ; optional, 64-bit, default shown

    [parameters]                  ; experiment-specific, see README
    alpha = 1.0
    n_list = 100, 316, 1000
    n_max = 30

    [output]                      ; optional section
    format = csv                  ; csv (default) or json
    filename = coherent           ; stem, default = experiment name

Usage::

    ssrc run --config sweep.ini [--out DIR] [--seed U64]
    ssrc validate --config sweep.ini
"""

from __future__ import annotations

import argparse
import configparser
import datetime
import json
import math
import pathlib
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import __version__, cvlimit, encodings, synthesis
from .hilbert import DIMENSION_CAP_DEFAULT, basis_state, make_basis
from .prng import DEFAULT_SEED, SplitMix64


class ConfigError(ValueError):
    """Invalid experiment configuration; carries all violations."""

    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("; ".join(violations))


# ---------------------------------------------------------------------------
# Parameter parsing


def _parse_int_list(text: str) -> list[int]:
    tokens = [t for t in re.split(r"[,\s]+", text.strip()) if t]
    return [int(t) for t in tokens]


def _parse_complex(text: str) -> complex:
    return complex(text.strip().replace(" ", ""))


def _parse_seed(text: str) -> int:
    value = int(text.strip(), 0)
    if not 0 <= value < 2**64:
        raise ValueError("seed must fit in 64 bits")
    return value


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    parameters: dict
    raw_parameters: dict
    seed: int
    fmt: str
    filename: str


@dataclass(frozen=True)
class _ExperimentSpec:
    """Registry entry: parameter schema, extra validation, runner."""

    params: dict[str, Callable[[str], object]]
    defaults: dict[str, object]
    check: Callable[[dict], list[str]]
    run: Callable[[dict, int], tuple[list[str], list[list], dict]]


def _pooled(fn: Callable, items: list) -> list:
    """Dispatch grid points to a worker pool, collecting in grid order."""
    if len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(8, len(items))) as pool:
        return list(pool.map(fn, items))


def _two_mode_cap_check(n_list: list[int], factor: int = 1) -> list[str]:
    if not n_list:
        return ["empty N grid"]
    dim = factor * max(n_list) + 1
    if dim > DIMENSION_CAP_DEFAULT:
        return [
            f"dimension {dim} exceeds cap {DIMENSION_CAP_DEFAULT} "
            f"for N={max(n_list)}"
        ]
    return []


def _rate_or_none(n_list: list[int], values: list[float]) -> dict:
    if len(n_list) >= 4:
        rate, r2 = cvlimit.fit_rate(n_list, values)
        return {"rate": rate, "r_squared": r2}
    return {"rate": None, "r_squared": None}


# ---------------------------------------------------------------------------
# Runners (columns, rows, derived)


def _run_coherent(p: dict, seed: int):
    def job(n: int):
        infid = max(0.0, 1.0 - cvlimit.coherent_window_fidelity(
            p["alpha"], n, p["n_max"]))
        return [n, infid, 1.0 - infid]

    rows = _pooled(job, p["n_list"])
    derived = _rate_or_none(p["n_list"], [r[1] for r in rows])
    return ["n", "infidelity", "fidelity"], rows, derived


def _check_coherent(p: dict) -> list[str]:
    out = _two_mode_cap_check(p["n_list"])
    if p["n_list"] and abs(p["alpha"]) ** 2 >= min(p["n_list"]):
        out.append(
            f"|alpha|^2 = {abs(p['alpha'])**2:.4g} must be < min N "
            f"= {min(p['n_list'])}"
        )
    if p["n_max"] < 0:
        out.append("n_max must be >= 0")
    return out


def _run_displacement(p: dict, seed: int):
    def job(n: int):
        return [n, cvlimit.displacement_residual(
            p["alpha"], p["k"], n, p["n_max"])]

    rows = _pooled(job, p["n_list"])
    derived = _rate_or_none(p["n_list"], [r[1] for r in rows])
    return ["n", "residual"], rows, derived


def _check_displacement(p: dict) -> list[str]:
    out = _check_coherent({**p, "n_max": p["n_max"]})
    if not 0 <= p["k"] <= p["n_max"]:
        out.append(f"need 0 <= k <= n_max, got k={p['k']} n_max={p['n_max']}")
    return out


def _run_squeezed(p: dict, seed: int):
    def job(n_pairs: int):
        infid = max(0.0, 1.0 - cvlimit.squeezed_window_fidelity(
            p["r"], p["phi"], n_pairs, p["n_max"]))
        return [n_pairs, infid, 1.0 - infid]

    rows = _pooled(job, p["n_list"])
    derived = _rate_or_none(p["n_list"], [r[1] for r in rows])
    return ["n_pairs", "infidelity", "fidelity"], rows, derived


def _check_squeezed(p: dict) -> list[str]:
    out = _two_mode_cap_check(p["n_list"], factor=2)
    if p["r"] < 0:
        out.append("squeezing magnitude r must be >= 0")
    return out


def _run_commutator(p: dict, seed: int):
    def job(n: int):
        return [
            n,
            p["n_max"],
            cvlimit.commutator_residual(n, p["n_max"]),
            2.0 * p["n_max"] / n,
        ]

    return ["n", "n_max", "residual", "closed_form"], \
        _pooled(job, p["n_list"]), {}


def _check_commutator(p: dict) -> list[str]:
    out = _two_mode_cap_check(p["n_list"])
    if p["n_list"] and p["n_max"] >= min(p["n_list"]):
        out.append(
            f"need n_max < min N; got n_max={p['n_max']} "
            f"min N={min(p['n_list'])}"
        )
    return out


def _run_phase_locking(p: dict, seed: int):
    report = cvlimit.phase_locking_curve(p["theta"], p["n_list"])

    rows = [
        [n, ex, asy, ra, ab]
        for n, ex, asy, ra, ab in zip(
            report.n_list,
            report.extras["exact"],
            report.extras["asymptote"],
            report.extras["ratio"],
            report.values,
        )
    ]
    return ["n", "exact", "asymptote", "ratio", "abs_diff"], rows, {}


def _check_phase_locking(p: dict) -> list[str]:
    out = [] if p["n_list"] else ["empty N grid"]
    if not 0 < p["theta"] < math.pi:
        out.append("theta must lie in (0, pi)")
    if sorted(set(p["n_list"])) != p["n_list"]:
        out.append("N grid must be strictly increasing")
    return out


def _run_overlap(p: dict, seed: int):
    def job(n: int):
        rec = cvlimit.overlap_asymptotics(p["alpha"], p["beta"], n)
        return [
            n,
            rec.exact.real,
            rec.exact.imag,
            abs(rec.exact),
            rec.limit,
            rec.residual,
            abs(rec.exact - rec.statevector),
        ]

    cols = ["n", "exact_re", "exact_im", "exact_abs", "limit",
            "residual", "statevector_agreement"]
    return cols, _pooled(job, p["n_list"]), {}


def _check_overlap(p: dict) -> list[str]:
    out = _two_mode_cap_check(p["n_list"])
    if p["n_list"]:
        bound = min(p["n_list"])
        for name in ("alpha", "beta"):
            if abs(p[name]) ** 2 >= bound:
                out.append(
                    f"|{name}|^2 = {abs(p[name])**2:.4g} must be < min N "
                    f"= {bound}"
                )
    return out


def _run_synthesis_bench(p: dict, seed: int):
    jobs = []
    for n in p["n_list"]:
        basis = make_basis(2, n)
        sub_seed = SplitMix64(seed).derive(n).next_u64()
        targets = synthesis.bench_targets(basis, p["targets"], sub_seed)
        start = basis_state(basis, (0, n))
        for idx, target in enumerate(targets):
            jobs.append((n, idx, target, start))

    def job(item):
        n, idx, target, start = item
        plan = synthesis.plan_two_mode(
            target, small_angle=p["small_angle"], passes=p["passes"]
        )
        result = synthesis.execute_plan(plan, start)
        return [n, idx, len(plan.steps), plan.total_repetitions,
                result.fidelity]

    cols = ["n", "target_index", "steps", "total_repetitions", "fidelity"]
    return cols, _pooled(job, jobs), {}


def _check_synthesis_bench(p: dict) -> list[str]:
    out = []
    if not p["n_list"]:
        out.append("empty N grid")
    for n in p["n_list"]:
        if n <= 0:
            out.append(f"N={n} in synthesis-bench grid must be positive")
    out.extend(_two_mode_cap_check([n for n in p["n_list"] if n > 0] or [0]))
    if p["targets"] < 1:
        out.append("targets must be >= 1")
    if not 0 < p["small_angle"] <= 1:
        out.append("small_angle must lie in (0, 1]")
    if p["passes"] not in (1, 2):
        out.append("passes must be 1 or 2")
    return out


def _run_synthesis_complexity(p: dict, seed: int):
    probe = synthesis.synthesis_complexity_probe(
        p["n_list"],
        p["fidelity_target"],
        small_angle=p["small_angle"],
        targets_per_n=p["targets_per_n"],
        seed=seed,
    )
    rows = [list(row) for row in probe.rows]
    cols = ["n", "median_steps", "median_total_repetitions", "min_fidelity"]
    derived = {
        "slope_steps": probe.slope_steps,
        "slope_repetitions": probe.slope_repetitions,
    }
    return cols, rows, derived


def _check_synthesis_complexity(p: dict) -> list[str]:
    out = []
    if not p["n_list"]:
        out.append("empty N grid")
    for n in p["n_list"]:
        if n <= 0:
            out.append(f"N={n} must be positive")
    if not 0 < p["fidelity_target"] <= 1:
        out.append("fidelity_target must lie in (0, 1]")
    if p["targets_per_n"] < 1:
        out.append("targets_per_n must be >= 1")
    return out


_TARGETS: dict[str, Callable[[], np.ndarray]] = {
    "hadamard": encodings.hadamard_gate,
    "x": lambda: np.array([[0, 1], [1, 0]], dtype=complex),
    "y": lambda: np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": lambda: np.diag([1.0 + 0j, -1.0 + 0j]),
    "s": lambda: encodings.phase_gate(math.pi / 2),
    "t": encodings.t_gate,
    "t_hadamard": lambda: encodings.t_gate() @ encodings.hadamard_gate(),
}


def _target_matrix(name: str) -> np.ndarray:
    key = name.strip().lower()
    if key in _TARGETS:
        return _TARGETS[key]()
    for prefix, fn in (("ry:", encodings.r_y), ("rz:", encodings.r_z),
                       ("phase:", encodings.phase_gate)):
        if key.startswith(prefix):
            return fn(float(key[len(prefix):]))
    raise ValueError(
        f"unknown target {name!r}; expected one of "
        f"{sorted(_TARGETS)} or ry:<angle>, rz:<angle>, phase:<angle>"
    )


def _run_encoding_feasibility(p: dict, seed: int):
    target = _target_matrix(p["target"])

    def job(n: int):
        enc = encodings.fock_encoding(make_basis(2, n))
        floor = encodings.grid_error_floor(
            target, enc, resolution=p["resolution"]
        )
        search = encodings.sg_gate_search(
            target,
            enc,
            restarts=p["restarts"],
            seed=SplitMix64(seed).derive(n).next_u64(),
        )
        report = encodings.feasibility_report(
            enc, p["target"], search, floor
        )
        row = [n, p["target"], search.error, floor.error,
               search.leakage, search.restarts]
        return row, report

    outcomes = _pooled(job, p["n_list"])
    cols = ["n", "target", "best_error", "certified_floor", "leakage",
            "restarts"]
    rows = [row for row, _ in outcomes]
    return cols, rows, {"reports": [rep for _, rep in outcomes]}


def _check_encoding_feasibility(p: dict) -> list[str]:
    out = _two_mode_cap_check(p["n_list"])
    for n in p["n_list"]:
        if n < 1:
            out.append(f"N={n} must be >= 1")
    try:
        _target_matrix(p["target"])
    except ValueError as exc:
        out.append(str(exc))
    if p["restarts"] < 1:
        out.append("restarts must be >= 1")
    if not 0 < p["resolution"] <= 0.5:
        out.append("resolution must lie in (0, 0.5]")
    return out


def _run_cnot_feasibility(p: dict, seed: int):
    def job(n: int):
        enc = encodings.fock_encoding(make_basis(2, n))
        res = encodings.cnot_search(
            enc,
            restarts=p["restarts"],
            seed=SplitMix64(seed).derive(n).next_u64(),
        )
        report = encodings.feasibility_report(enc, "cnot", res, None)
        dim = math.comb(2 * n + 3, 3)
        return [n, res.error, res.leakage, res.restarts, dim], report

    outcomes = _pooled(job, p["n_list"])
    cols = ["n", "best_error", "leakage", "restarts", "dimension"]
    return cols, [row for row, _ in outcomes], {
        "reports": [rep for _, rep in outcomes]
    }


def _check_cnot_feasibility(p: dict) -> list[str]:
    out = []
    if not p["n_list"]:
        out.append("empty N grid")
    for n in p["n_list"]:
        if n < 1:
            out.append(f"N={n} must be >= 1")
        else:
            dim = math.comb(2 * n + 3, 3)
            if dim > DIMENSION_CAP_DEFAULT:
                out.append(
                    f"dimension {dim} exceeds cap {DIMENSION_CAP_DEFAULT} "
                    f"for N={n}"
                )
    if p["restarts"] < 1:
        out.append("restarts must be >= 1")
    return out


EXPERIMENTS: dict[str, _ExperimentSpec] = {
    "convergence-coherent": _ExperimentSpec(
        {"alpha": _parse_complex, "n_list": _parse_int_list, "n_max": int},
        {"n_max": 30},
        _check_coherent,
        _run_coherent,
    ),
    "convergence-displacement": _ExperimentSpec(
        {"alpha": _parse_complex, "k": int, "n_list": _parse_int_list,
         "n_max": int},
        {"k": 2, "n_max": 40},
        _check_displacement,
        _run_displacement,
    ),
    "convergence-squeezed": _ExperimentSpec(
        {"r": float, "phi": float, "n_list": _parse_int_list, "n_max": int},
        {"phi": 0.0, "n_max": 20},
        _check_squeezed,
        _run_squeezed,
    ),
    "commutator": _ExperimentSpec(
        {"n_list": _parse_int_list, "n_max": int},
        {"n_max": 10},
        _check_commutator,
        _run_commutator,
    ),
    "phase-locking": _ExperimentSpec(
        {"theta": float, "n_list": _parse_int_list},
        {},
        _check_phase_locking,
        _run_phase_locking,
    ),
    "overlap": _ExperimentSpec(
        {"alpha": _parse_complex, "beta": _parse_complex,
         "n_list": _parse_int_list},
        {},
        _check_overlap,
        _run_overlap,
    ),
    "synthesis-bench": _ExperimentSpec(
        {"n_list": _parse_int_list, "targets": int, "small_angle": float,
         "passes": int},
        {"targets": 5, "small_angle": 1e-3, "passes": 2},
        _check_synthesis_bench,
        _run_synthesis_bench,
    ),
    "synthesis-complexity": _ExperimentSpec(
        {"n_list": _parse_int_list, "fidelity_target": float,
         "small_angle": float, "targets_per_n": int},
        {"fidelity_target": 0.99, "small_angle": 1e-3, "targets_per_n": 3},
        _check_synthesis_complexity,
        _run_synthesis_complexity,
    ),
    "encoding-feasibility": _ExperimentSpec(
        {"n_list": _parse_int_list, "target": str, "restarts": int,
         "resolution": float},
        {"target": "hadamard", "restarts": 8, "resolution": 1e-2},
        _check_encoding_feasibility,
        _run_encoding_feasibility,
    ),
    "cnot-feasibility": _ExperimentSpec(
        {"n_list": _parse_int_list, "restarts": int},
        {"restarts": 8},
        _check_cnot_feasibility,
        _run_cnot_feasibility,
    ),
}


# ---------------------------------------------------------------------------
# Config loading and validation


def load_config(path: str | pathlib.Path) -> ExperimentConfig:
    """Parse and validate; raises ConfigError listing every violation."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError([f"INI syntax error: {exc}"]) from exc

    violations: list[str] = []
    if not parser.has_section("experiment"):
        raise ConfigError(["missing [experiment] section"])
    name = parser.get("experiment", "name", fallback=None)
    if name is None:
        raise ConfigError(["missing 'name' under [experiment]"])
    name = name.strip()
    if name not in EXPERIMENTS:
        raise ConfigError(
            [f"unknown experiment {name!r}; expected one of "
             f"{sorted(EXPERIMENTS)}"]
        )
    spec = EXPERIMENTS[name]

    seed = DEFAULT_SEED
    seed_text = parser.get("experiment", "seed", fallback=None)
    if seed_text is not None:
        try:
            seed = _parse_seed(seed_text)
        except ValueError as exc:
            violations.append(f"bad seed: {exc}")

    raw = dict(parser.items("parameters")) if parser.has_section(
        "parameters") else {}
    params: dict = {}
    for key, parse in spec.params.items():
        if key in raw:
            try:
                params[key] = parse(raw[key])
            except ValueError as exc:
                violations.append(f"bad value for {key!r}: {exc}")
        elif key in spec.defaults:
            params[key] = spec.defaults[key]
        else:
            violations.append(f"missing parameter {key!r}")
    for key in raw:
        if key not in spec.params:
            violations.append(f"unknown parameter {key!r} for {name}")

    fmt = "csv"
    filename = name
    if parser.has_section("output"):
        fmt = parser.get("output", "format", fallback="csv").strip().lower()
        filename = parser.get("output", "filename", fallback=name).strip()
        if fmt not in ("csv", "json"):
            violations.append(f"unknown output format {fmt!r}")

    if not violations:
        violations.extend(spec.check(params))
    if violations:
        raise ConfigError(violations)
    return ExperimentConfig(name, params, raw, seed, fmt, filename)


# ---------------------------------------------------------------------------
# Emission


def _fmt_cell(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.16e}"
    return str(value)


def _plain(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    return value


def run_experiment(
    config: ExperimentConfig, out_dir: str | pathlib.Path = "."
) -> list[pathlib.Path]:
    """Execute one experiment; returns the written file paths."""
    spec = EXPERIMENTS[config.name]
    started = time.perf_counter()
    columns, rows, derived = spec.run(config.parameters, config.seed)
    walltime = time.perf_counter() - started
    rows = [[_plain(v) for v in row] for row in rows]

    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    data_path = out / f"{config.filename}.{config.fmt}"
    if config.fmt == "csv":
        lines = [",".join(columns)]
        lines.extend(",".join(_fmt_cell(v) for v in row) for row in rows)
        data_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        doc = {"columns": columns, "rows": rows, "derived": derived}
        data_path.write_text(
            json.dumps(doc, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    written.append(data_path)

    meta = {
        "experiment": config.name,
        "parameters": config.raw_parameters,
        "seed": config.seed,
        "format": config.fmt,
        "library_version": __version__,
        "derived": derived,
        "timestamp": datetime.datetime.now(
            datetime.timezone.utc
        ).isoformat(),
        "walltime_s": walltime,
    }
    meta_path = out / f"{config.filename}.meta.json"
    meta_path.write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    written.append(meta_path)
    return written


# ---------------------------------------------------------------------------
# Entry point


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="ssrc",
        description="Fixed-photon-number two-mode state experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run an experiment config")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--out", default=".")
    run_p.add_argument("--seed", type=_parse_seed, default=None)
    val_p = sub.add_parser("validate", help="check a config without running")
    val_p.add_argument("--config", required=True)
    args = parser.parse_args(argv)

    if not pathlib.Path(args.config).is_file():
        print(f"config file not found: {args.config}", file=sys.stderr)
        return 2

    if args.command == "validate":
        try:
            config = load_config(args.config)
        except ConfigError as exc:
            for violation in exc.violations:
                print(f"violation: {violation}")
            return 1
        print(f"OK: {config.name} (seed {config.seed:#x})")
        return 0

    try:
        config = load_config(args.config)
    except ConfigError as exc:
        for violation in exc.violations:
            print(f"error: {violation}", file=sys.stderr)
        return 2
    if args.seed is not None:
        config = ExperimentConfig(
            config.name,
            config.parameters,
            config.raw_parameters,
            args.seed,
            config.fmt,
            config.filename,
        )
    try:
        written = run_experiment(config, args.out)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
