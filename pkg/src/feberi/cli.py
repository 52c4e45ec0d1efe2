"""Command-line runner: `feberi run|validate|scenarios`.

Configs are INI files with [run], [physics], [numerics] and [sweep]
sections.  Parsing is strict: unknown keys are rejected with their line
numbers, every physical default equals the reference parameter set
(200 keV beam, 2.4 nm impact parameter, 2 eV gap, 5 Debye transverse
dipole).  Results go to files only (CSV per series, summary.json, SVG
plots); logs go to stderr.  Exit codes: 0 ok, 2 config error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import sys
from pathlib import Path

import numpy as np

from feberi import __version__
from feberi.born_dynamics import StepSizeError
from feberi.core import DomainError
from feberi.qew import ResolutionError, TruncationError, gamma_parameter
from feberi.scenarios import SCENARIOS, ScenarioResult, physics_bundle, run_scenario
from feberi.solver_density import AssemblyError, write_rho_b_bin
from feberi.solver_momentum import InstabilityError, MomentumGrid, build_grid

log = logging.getLogger("feberi")


class ConfigError(ValueError):
    """Invalid configuration file (reported with line/field diagnostics)."""


# -- schema ---------------------------------------------------------------------------

_COMMON_SCHEMA = {
    "run": {
        "scenario": ("choice", sorted(SCENARIOS), None),
        "seed": ("int", None, 12345),
        "output_dir": ("str", None, "out"),
    },
    "physics": {
        "beam_energy_kev": ("float", None, 200.0),
        "impact_parameter_nm": ("float", None, 2.4),
        "energy_gap_ev": ("float", None, 2.0),
        "dipole_debye": ("float", None, 5.0),
        "orientation": ("choice", ["parallel", "transverse"], "transverse"),
    },
    "numerics": {
        "grid_points": ("int", None, 256),
        "integrator": ("choice", ["rk4", "euler"], "rk4"),
        "window_transit_factor": ("float", None, 10.0),
        "window_sigma_factor": ("float", None, 6.0),
        "time_samples": ("int", None, 300),
        "assembly": ("choice", ["spectral", "dft"], "spectral"),
        "transform_convention": ("choice", ["fourier", "reduced"], "fourier"),
        "prefactor_convention": ("choice", ["bare", "two_pi"], "bare"),
        "dump_rho_b": ("bool", None, False),
        "profile_points_per_scale": ("int", None, 100),
    },
}

_SWEEP_SCHEMAS = {
    "fig3_ground": {
        "sigma_et_over_period": ("float_list", None, [0.1, 0.3, 1.0]),
    },
    "fig4_superposition": {
        "sigma_et_over_period": ("float_list", None, [0.1, 0.3, 1.0]),
        "zeta_over_pi": ("float", None, 0.5),
    },
    "fig56_phase_size_sweep": {
        "gamma_values": ("float_list", None,
                         [0.1, 0.3, 0.6, 0.9, 1.2, 1.5, 2.0, 2.8, 3.8]),
        "zeta_points": ("int", None, 16),
    },
    "modulated_resonance": {
        "modulation_g": ("float", None, 4.0),
        "harmonic": ("int", None, 2),
        "envelope_sigma_et_fs": ("float", None, 5.0),
        "harmonic_order": ("int", None, 24),
        "scan_points": ("int", None, 41),
        "scan_halfwidth_inv_sigma": ("float", None, 4.0),
        "scan_harmonics": ("int_list", None, [1, 2, 3]),
        "born_check": ("bool", None, True),
        "spot_check_detunings": ("float_list", None, [0.0, 0.5, 1.0]),
    },
    "fig8_single_point": {
        "sigma_et_over_period": ("float_list", None, [0.015]),
    },
    "fig9_buildup": {
        "harmonic": ("int", None, 2),
        "modulation_g": ("float", None, 4.0),
        "envelope_sigma_et_fs": ("float", None, 10.0),
        "harmonic_order": ("int", None, 32),
        "mean_spacing_periods": ("float", None, 3.0),
        "correlated_electrons": ("int", None, 20),
        "random_electrons": ("int", None, 400),
        "ensemble_seeds": ("int", None, 64),
        "sigma_et_point_fs": ("float", None, 0.0),  # 0 = use the bunch width
    },
    "solver_crosscheck": {
        "sigma_et_over_period": ("float_list", None, [0.1]),
    },
}


def default_config(scenario: str) -> dict:
    """Effective config of a scenario with every key at its default."""
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}")
    schema = dict(_COMMON_SCHEMA)
    schema["sweep"] = _SWEEP_SCHEMAS[scenario]
    cfg = {section: {k: spec[2] for k, spec in keys.items()}
           for section, keys in schema.items()}
    cfg["run"]["scenario"] = scenario
    return cfg


def _parse_value(raw: str, kind: str, choices, where: str):
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            low = raw.strip().lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if kind == "float_list":
            return [float(x) for x in raw.replace(",", " ").split()]
        if kind == "int_list":
            return [int(x) for x in raw.replace(",", " ").split()]
        if kind == "choice":
            if raw not in choices:
                raise ValueError(f"must be one of {choices}, got {raw!r}")
            return raw
        return raw
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _key_lines(text: str) -> dict[tuple[str, str], int]:
    """Map (section, key) to its 1-based line number for diagnostics."""
    lines = {}
    section = ""
    for i, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith(("#", ";")):
            continue
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
        elif "=" in s or ":" in s:
            sep = min((s.find(c) for c in "=:" if s.find(c) >= 0), default=-1)
            if sep > 0:
                lines[(section, s[:sep].strip().lower())] = i
    return lines


def load_config(path) -> dict:
    """Parse and validate a config file into the effective config dict."""
    text = Path(path).read_text(encoding="utf-8")
    lines = _key_lines(text)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    if not parser.has_section("run") or not parser.has_option("run", "scenario"):
        raise ConfigError(f"{path}: missing [run] scenario = <name>")
    scenario = parser.get("run", "scenario").strip()
    if scenario not in SCENARIOS:
        ln = lines.get(("run", "scenario"), 0)
        raise ConfigError(f"{path}:{ln}: unknown scenario {scenario!r}; "
                          f"known: {', '.join(sorted(SCENARIOS))}")

    schema = dict(_COMMON_SCHEMA)
    schema["sweep"] = _SWEEP_SCHEMAS[scenario]

    cfg: dict = {}
    for section, keys in schema.items():
        cfg[section] = {k: spec[2] for k, spec in keys.items()}
    cfg["run"]["scenario"] = scenario

    for section in parser.sections():
        if section not in schema:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in schema[section]:
                ln = lines.get((section, key), 0)
                raise ConfigError(
                    f"{path}:{ln}: unknown key {key!r} in [{section}] for "
                    f"scenario {scenario}")
            kind, choices, _default = schema[section][key]
            ln = lines.get((section, key), 0)
            cfg[section][key] = _parse_value(raw, kind, choices,
                                             f"{path}:{ln}: [{section}] {key}")
    return cfg


# -- output writers --------------------------------------------------------------------

def _csv_cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_result(result: ScenarioResult, out_dir: Path) -> list[Path]:
    from feberi.plotsvg import line_plot

    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for s in result.series:
        cols = {k: v for k, v in s.columns.items() if not k.startswith("_")}
        csv_path = out_dir / f"results_{s.name}.csv"
        names = list(cols)
        rows = zip(*(np.asarray(cols[k]).ravel() for k in names))
        with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(names) + "\n")
            for row in rows:
                fh.write(",".join(_csv_cell(v) for v in row) + "\n")
        written.append(csv_path)
        if s.plot_x and s.plot_y:
            svg_path = out_dir / f"{s.name}.svg"
            x = np.asarray(cols[s.plot_x], dtype=float)
            line_plot(svg_path,
                      [(x, np.asarray(cols[y], dtype=float), y) for y in s.plot_y],
                      s.title or s.name, s.xlabel or s.plot_x, s.ylabel or "")
            written.append(svg_path)
        rho = s.columns.get("_rho_b")
        if rho is not None:
            bin_path = out_dir / f"rho_b_{s.name}.bin"
            times = np.asarray(next(iter(cols.values())), dtype=float)
            write_rho_b_bin(bin_path, times, rho)
            written.append(bin_path)

    def _jsonable(obj):
        if isinstance(obj, dict):
            return {k: _jsonable(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [_jsonable(v) for v in obj]
        if isinstance(obj, (np.floating, np.integer)):
            return obj.item()
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        return obj

    summary_path = out_dir / "summary.json"
    payload = {"summary": _jsonable(result.summary),
               "metadata": _jsonable(result.metadata)}
    summary_path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    written.append(summary_path)
    return written


# -- validation report -------------------------------------------------------------------

def validate_config(cfg: dict) -> list[str]:
    """Dry-run checks; returns a list of report lines (violations flagged)."""
    report = []
    kin, tls, geo, coupling = physics_bundle(cfg)
    num = cfg["numerics"]
    n = num["grid_points"]
    report.append(f"scenario: {cfg['run']['scenario']}")
    report.append(f"gamma={kin.gamma:.4f} beta={kin.beta:.4f} "
                  f"omega21={tls.omega_21:.4f} rad/fs t_r={geo.transit_time * 1e3:.3f} as")
    try:
        MomentumGrid(n=n, p0=kin.p0, p_cutoff=1.0)
        report.append(f"grid points: {n} (ok)")
    except DomainError as exc:
        report.append(f"ERROR grid: {exc}")

    sweep = cfg["sweep"]
    sigma_fracs = sweep.get("sigma_et_over_period", [])
    for frac in sigma_fracs:
        sigma = frac * tls.period
        gam = gamma_parameter(tls.omega_21, sigma)
        regime = "near-point-particle" if gam < 1.0 else "wave"
        line = (f"sigma_et = {frac:g} T21 = {sigma:.4g} fs: Gamma = {gam:.3g} "
                f"({regime} regime)")
        if gam > 1.0:
            line += "; WARNING: outside the short-packet validity of the " \
                    "probabilistic closed forms (size-independent law governs)"
        report.append(line)
        try:
            from feberi.qew import GaussianQewSpec
            spec = GaussianQewSpec.from_duration(kin, sigma)
            build_grid(kin, spec.sigma_p0, coupling.recoil_momentum, n)
        except DomainError as exc:
            report.append(f"ERROR grid sizing at sigma_et={frac:g} T21: {exc}")
    for gam in sweep.get("gamma_values", []):
        if gam > 1.0:
            report.append(f"Gamma = {gam:g}: wave regime (size-independent law governs)")

    mem = (2 * n) ** 2 * 16 * 4 / 1e6
    report.append(f"estimated peak memory: {mem:.0f} MB "
                  f"(joint matrices {2 * n} x {2 * n})")
    report.append(f"window factors: transit x{num['window_transit_factor']:g}, "
                  f"sigma x{num['window_sigma_factor']:g}")
    t_r_w = geo.transit_time * tls.omega_21
    report.append(f"t_r * omega21 = {t_r_w:.3g} "
                  f"({'fast transit' if t_r_w < 1 else 'slow transit'})")
    if not any(line.startswith("ERROR") for line in report):
        report.append("valid")
    return report


# -- entry point ---------------------------------------------------------------------------

_NUMERICAL_ERRORS = (DomainError, ResolutionError, TruncationError, AssemblyError,
                     StepSizeError, InstabilityError, np.linalg.LinAlgError,
                     FloatingPointError)


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    ap = argparse.ArgumentParser(
        prog="feberi",
        description="Free-electron / two-level-system interaction simulator")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    ap_run = sub.add_parser("run", help="run a scenario config")
    ap_run.add_argument("config")
    ap_run.add_argument("--jobs", type=int, default=1,
                        help="worker processes for sweep points")
    ap_run.add_argument("--seed", type=int, default=None, help="override [run] seed")
    ap_run.add_argument("--out", default=None, help="override [run] output_dir")

    ap_val = sub.add_parser("validate", help="dry-run checks of a config")
    ap_val.add_argument("config")

    sub.add_parser("scenarios", help="list built-in scenarios")

    args = ap.parse_args(argv)

    if args.command == "scenarios":
        for name in sorted(SCENARIOS):
            print(f"{name:26s} {SCENARIOS[name][1]}")
        return 0

    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as exc:
        log.error("%s", exc)
        return 2

    if args.command == "validate":
        for line in validate_config(cfg):
            print(line)
        return 0

    if args.seed is not None:
        cfg["run"]["seed"] = args.seed
    if args.out is not None:
        cfg["run"]["output_dir"] = args.out

    log.info("running scenario %s (seed %d)", cfg["run"]["scenario"],
             cfg["run"]["seed"])
    try:
        result = run_scenario(cfg, jobs=args.jobs)
    except _NUMERICAL_ERRORS as exc:
        log.error("numerical failure: %s", exc)
        return 3
    out_dir = Path(cfg["run"]["output_dir"])
    files = write_result(result, out_dir)
    for f in files:
        log.info("wrote %s", f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
