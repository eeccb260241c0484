"""Command-line front end.

    python -m ionlgt modes    --trap trap.json --branch transverse
    python -m ionlgt design   --target schwinger --N 4 --x 0.6 --mu 0.1
    python -m ionlgt validate --design out/design.json
    python -m ionlgt evolve   --N 4 --x 0.6 --mu 0.1 --t-max 100 --ensemble 20
    python -m ionlgt raman    --detuning-ratio 0.41421356 --pol-red 1,1.64,1 --pol-blue -1,1.64,1
    python -m ionlgt report   --dir out

Frequencies on the command line and in config files are in Hz, kHz or MHz
as the flag name says; everything is converted to rad/s here. Exit status
is 0 on success, 2 when a design is infeasible or violates a validity
condition, and 1 on any other error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import artifacts
from .coupling import PAIRS, ChainSetup, LaserDrive
from .ion_chain import NU_AXIAL_HZ, NU_TRANSVERSE_HZ, YB171_MASS, TrapConfig, load_trap_config

__all__ = ["OUTPUT_ENV", "UsageError", "RunConfig", "parse_config", "run_command", "main"]

OUTPUT_ENV = "IONLGT_OUTPUT_DIR"
DEFAULT_OUTPUT = "ionlgt_out"

EXIT_OK, EXIT_ERROR, EXIT_VIOLATION = 0, 1, 2

COMMANDS = ("modes", "design", "validate", "evolve", "raman", "report")


class UsageError(ValueError):
    """Invalid command line or config file; ``problems`` lists every violation."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass
class RunConfig:
    command: str
    output_dir: Path
    seed: int = 0
    inputs: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    def canonical(self):
        """Everything that determines the artifacts (the output path does not)."""
        ins = {}
        for k, p in sorted(self.inputs.items()):
            ins[k] = hashlib.sha256(Path(p).read_bytes()).hexdigest()[:16]
        return {"command": self.command, "seed": self.seed, "inputs": ins,
                "options": artifacts.canonical(self.options)}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError([message])


def _build_parser():
    p = _Parser(prog="ionlgt", description="Trapped-ion lattice-gauge-theory simulation designer")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")
        sp.add_argument("--config", help="JSON file of option defaults (keys are flag names)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--trap", help="trap JSON (n_ions, nu_transverse_hz, nu_axial_hz, ...)")

    sp = sub.add_parser("modes", help="normal-mode CSVs")
    common(sp)
    sp.add_argument("--N", type=int, help="ion count when no trap file is given")
    sp.add_argument("--branch", choices=("transverse", "axial", "both"), default="both")

    sp = sub.add_parser("design", help="fit laser drives to a target Hamiltonian")
    common(sp)
    sp.add_argument("--target", choices=("schwinger", "file"), default="schwinger")
    sp.add_argument("--target-file", help="TargetHamiltonian JSON (with --target file)")
    sp.add_argument("--N", type=int, default=4)
    sp.add_argument("--x", type=float, default=0.6)
    sp.add_argument("--mu", type=float, default=0.1)
    sp.add_argument("--eps0", type=float, default=0.0)
    sp.add_argument("--scheme", choices=("single", "multi"))
    sp.add_argument("--fs", type=float, help="detuning-schedule fraction for every pair")
    sp.add_argument("--budget-mhz", type=float, default=2.0, help="per-ion Rabi budget / 2 pi")
    sp.add_argument("--energy-unit-khz", type=float, default=1.0, help="energy unit / 2 pi")
    sp.add_argument("--restarts", type=int, default=16)
    sp.add_argument("--pairs", default="I,II,III")

    sp = sub.add_parser("validate", help="Magnus panels and validity conditions of a design")
    common(sp)
    sp.add_argument("--design", required=False, help="design.json written by 'design'")
    sp.add_argument("--t-max-ms", type=float, default=2.0)
    sp.add_argument("--n-times", type=int, default=201)
    sp.add_argument("--ion", type=int, default=1, help="1-based ion for the panel data")

    sp = sub.add_parser("evolve", help="vacuum persistence amplitude")
    common(sp)
    sp.add_argument("--design", help="evolve the engineered model of a design instead")
    sp.add_argument("--hamiltonian", help="TargetHamiltonian JSON")
    sp.add_argument("--N", type=int, default=4)
    sp.add_argument("--x", type=float, default=0.6)
    sp.add_argument("--mu", type=float, default=0.1)
    sp.add_argument("--eps0", type=float, default=0.0)
    sp.add_argument("--state", default="staggered-vacuum",
                    help="state token or CSV of amplitudes (columns re, im)")
    sp.add_argument("--t-max", type=float, default=100.0)
    sp.add_argument("--n-times", type=int, default=401)
    sp.add_argument("--method", choices=("eig", "ode"), default="eig")
    sp.add_argument("--ensemble", type=int, default=0, help="perturbed-hopping ensemble size")
    sp.add_argument("--threshold", type=float, default=1e-4)
    sp.add_argument("--detuning-range-khz", type=float, nargs=2, default=(-1000.0, -470.0))

    sp = sub.add_parser("raman", help="polarization report")
    common(sp)
    sp.add_argument("--detuning-ratio", type=float, default=float(np.sqrt(2) - 1),
                    help="Delta / omega_F")
    sp.add_argument("--omega-f", type=float, default=1.0, help="fine-structure splitting [rad/s]")
    sp.add_argument("--phase", type=float, default=0.0)
    sp.add_argument("--pol-red", help="sigma-,pi,sigma+ amplitudes (real)")
    sp.add_argument("--pol-blue")

    sp = sub.add_parser("report", help="bundle every artifact of a directory")
    common(sp)
    sp.add_argument("--dir", help="directory to summarise (default: the output directory)")
    return p


_INPUT_KEYS = ("trap", "target_file", "design", "hamiltonian", "config")


def parse_config(argv):
    """Validated :class:`RunConfig`; raises :class:`UsageError` listing every problem."""
    parser = _build_parser()
    ns = parser.parse_args(argv)
    problems = []
    if ns.config:
        path = Path(ns.config)
        if not path.is_file():
            raise UsageError([f"config file not found: {path}"])
        try:
            extra = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise UsageError([f"{path}:{exc.lineno}:{exc.colno}: malformed JSON ({exc.msg})"])
        if not isinstance(extra, dict):
            raise UsageError([f"{path}: top level must be an object"])
        given = {a.split("=")[0].lstrip("-").replace("-", "_") for a in argv if a.startswith("--")}
        for key, val in extra.items():
            attr = key.replace("-", "_")
            if not hasattr(ns, attr) or attr in ("command", "config"):
                problems.append(f"{path}: unknown key {key!r}")
            elif attr not in given:
                setattr(ns, attr, val)
    inputs = {}
    for key in _INPUT_KEYS:
        val = getattr(ns, key, None)
        if key == "config" or not val:
            continue
        if not Path(val).is_file():
            problems.append(f"--{key.replace('_', '-')}: file not found: {val}")
        else:
            inputs[key] = str(val)
    state = getattr(ns, "state", None)
    if state and state not in ("staggered-vacuum", "vacuum", "all-up", "all-down"):
        if not Path(state).is_file():
            problems.append(f"--state: neither a known token nor a file: {state}")
        else:
            inputs["state"] = state
    if ns.command == "design":
        if ns.target == "file" and not ns.target_file:
            problems.append("--target file needs --target-file")
        if ns.N is not None and (ns.N < 2 or ns.N % 2):
            problems.append("--N must be an even integer >= 2")
        bad = [p for p in ns.pairs.split(",") if p not in PAIRS]
        if bad:
            problems.append(f"--pairs: unknown pair(s) {bad}")
        if ns.restarts < 1:
            problems.append("--restarts must be >= 1")
    if ns.command == "validate" and not ns.design:
        problems.append("validate needs --design")
    if ns.command == "evolve":
        if ns.n_times < 1:
            problems.append("--n-times must be >= 1")
        if ns.t_max < 0:
            problems.append("--t-max must be non-negative")
    if ns.command == "raman":
        for flag in ("pol_red", "pol_blue"):
            val = getattr(ns, flag)
            if val is None:
                continue
            try:
                parts = [float(v) for v in val.split(",")]
            except ValueError:
                parts = []
            if len(parts) != 3:
                problems.append(f"--{flag.replace('_', '-')}: need three comma-separated numbers")
    if ns.command == "modes" and not ns.trap and ns.N is None:
        problems.append("modes needs --trap or --N")
    if problems:
        raise UsageError(problems)
    out = ns.out or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT
    opts = {k: v for k, v in vars(ns).items()
            if k not in ("command", "out", "config", "seed") and k not in inputs}
    opts = {k: (list(v) if isinstance(v, tuple) else v) for k, v in opts.items()}
    return RunConfig(ns.command, Path(out), ns.seed, inputs, opts)


# --- helpers -----------------------------------------------------------------

def _setup(cfg, n=None):
    if "trap" in cfg.inputs:
        trap = load_trap_config(cfg.inputs["trap"])
        if n is not None and trap.n_ions != n:
            raise ValueError(f"trap file has {trap.n_ions} ions, run needs {n}")
    else:
        trap = TrapConfig(n, NU_TRANSVERSE_HZ, NU_AXIAL_HZ, YB171_MASS)
    return ChainSetup.from_trap(trap)


def _load_design(path):
    path = Path(path)
    doc = json.loads(path.read_text())
    drives = {}
    for pair, name in doc["drives"].items():
        drives[pair] = LaserDrive.from_dict(json.loads((path.parent / name).read_text()))
    return doc, drives


def _design_setup(doc, cfg):
    trap = TrapConfig.from_dict(doc["trap"])
    if "trap" in cfg.inputs:
        trap = load_trap_config(cfg.inputs["trap"])
    return ChainSetup.from_trap(trap)


# --- commands ----------------------------------------------------------------

def _cmd_modes(cfg, meta):
    from .ion_chain import normal_modes

    o = cfg.options
    trap = load_trap_config(cfg.inputs["trap"]) if "trap" in cfg.inputs else TrapConfig(
        o["N"], NU_TRANSVERSE_HZ, NU_AXIAL_HZ, YB171_MASS)
    branches = ("transverse", "axial") if o["branch"] == "both" else (o["branch"],)
    written = []
    for b in branches:
        m = normal_modes(trap, b)
        written.append(artifacts.write_text(cfg.output_dir / f"modes_{b}.csv", m.to_csv(), meta))
    return EXIT_OK, written


def _cmd_design(cfg, meta):
    from .pulse_optimizer import (InfeasibleDesignError, design_schwinger, detuning_schedule,
                                  fit_multifrequency, MULTI_FS)
    from .target_models import SchwingerParams, TargetHamiltonian

    o = cfg.options
    out = cfg.output_dir
    pairs = tuple(o["pairs"].split(","))
    budget = 2 * np.pi * o["budget_mhz"] * 1e6
    unit = 2 * np.pi * o["energy_unit_khz"] * 1e3
    fs = None if o["fs"] is None else {p: o["fs"] for p in PAIRS}
    status = EXIT_OK
    try:
        if o["target"] == "schwinger":
            params = SchwingerParams(o["N"], o["x"], o["mu"], o["eps0"])
            setup = _setup(cfg, o["N"])
            d = design_schwinger(params, setup, energy_unit=unit, scheme=o["scheme"],
                                 budget=budget, restarts=o["restarts"], seed=cfg.seed,
                                 pairs=pairs, fs=fs)
            target, drives, reports, bz, scheme = d.target, d.drives, d.reports, d.bz, d.scheme
        else:
            target = TargetHamiltonian.from_dict(json.loads(Path(cfg.inputs["target_file"]).read_text()))
            setup = _setup(cfg, target.n_spins)
            drives, reports = {}, {}
            for pair in pairs:
                tj = target.coupling({"I": "x", "II": "y", "III": "z"}[pair]) * unit
                if not np.any(tj):
                    continue
                modes = setup.modes_for(pair)
                sched = detuning_schedule(modes, (fs or MULTI_FS)[pair])
                drives[pair], reports[pair] = fit_multifrequency(
                    tj, modes, sched, setup.recoils[pair], setup.eta[pair], pair=pair,
                    budget=budget, restarts=o["restarts"], seed=cfg.seed)
            bz, scheme = target.bz * unit, "multi"
    except InfeasibleDesignError as exc:
        path = out / "fit_infeasible.json"
        payload = {"schema_version": 1, "error": str(exc)}
        if exc.report is not None:
            payload["report"] = exc.report.to_dict()
        artifacts.write_json(path, payload, meta)
        print(f"design: infeasible: {exc}", file=sys.stderr)
        return EXIT_VIOLATION, [path]
    written = [artifacts.write_json(out / "target.json", target.to_dict(), meta)]
    names = {}
    for pair, drive in drives.items():
        names[pair] = f"drive_{pair}.json"
        written.append(artifacts.write_json(out / names[pair], drive.to_dict(), meta))
        written.append(artifacts.write_json(out / f"fit_{pair}.json", reports[pair].to_dict(), meta))
        if not reports[pair].feasible:
            status = EXIT_VIOLATION
    doc = {"schema_version": 1, "scheme": scheme, "energy_unit_hz": unit / (2 * np.pi),
           "bz_hz": np.asarray(bz) / (2 * np.pi), "trap": setup.trap.to_dict(), "drives": names,
           "target": "target.json"}
    written.append(artifacts.write_json(out / "design.json", doc, meta))
    return status, written


def _cmd_validate(cfg, meta):
    from .magnus import contribution_report, extract_j_from_chi, magnus_terms, panels_to_csv
    from .pulse_optimizer import check_constraints

    o = cfg.options
    doc, drives = _load_design(cfg.inputs["design"])
    setup = _design_setup(doc, cfg)
    bz = 2 * np.pi * np.asarray(doc["bz_hz"], dtype=float)
    t = np.linspace(0.0, o["t_max_ms"] * 1e-3, o["n_times"])
    ion = o["ion"] - 1
    if not 0 <= ion < setup.n_ions:
        raise ValueError(f"--ion must lie in 1..{setup.n_ions}")
    panels = contribution_report(drives, setup, bz, t, ion=ion)
    written = [artifacts.write_text(cfg.output_dir / "magnus_panels.csv",
                                    panels_to_csv(panels, t), meta)]
    rep = check_constraints(drives, setup, bz)
    mt = magnus_terms(drives, setup, None, t)
    secular = {}
    for pair, drive in drives.items():
        ax = {"I": "x", "II": "y", "III": "z"}[pair]
        j_fit, _ = extract_j_from_chi(t, mt.chi(ax))
        j_ref = setup.coupling(drive)
        scale = np.abs(j_ref).max()
        secular[pair] = {"max_rel_deviation": float(np.abs(j_fit - j_ref).max() / scale) if scale else 0.0}
    payload = dict(rep.to_dict(), secular=secular,
                   per_pair={k: {"spin_phonon": float(v.max())} for k, v in rep.spin_phonon.items()})
    written.append(artifacts.write_json(cfg.output_dir / "constraints.json", payload, meta))
    return (EXIT_OK if rep.passed else EXIT_VIOLATION), written


def _cmd_evolve(cfg, meta):
    from .dynamics import SpinState, ensemble_band, evolve_state, perturbed_hopping_ensemble, vpa_series
    from .target_models import SchwingerParams, TargetHamiltonian, schwinger_hamiltonian

    o = cfg.options
    if "design" in cfg.inputs:
        doc, drives = _load_design(cfg.inputs["design"])
        setup = _design_setup(doc, cfg)
        unit = 2 * np.pi * doc["energy_unit_hz"]
        bz = 2 * np.pi * np.asarray(doc["bz_hz"], dtype=float)
        h = setup.effective_model(drives, bz).in_units(unit)
    elif "hamiltonian" in cfg.inputs:
        h = TargetHamiltonian.from_dict(json.loads(Path(cfg.inputs["hamiltonian"]).read_text()))
    else:
        h = schwinger_hamiltonian(SchwingerParams(o["N"], o["x"], o["mu"], o["eps0"]))
    n = h.n_spins
    psi0 = SpinState.from_file(cfg.inputs["state"]) if "state" in cfg.inputs else SpinState.named(o["state"], n)
    t = np.linspace(0.0, o["t_max"], o["n_times"])
    vpa = vpa_series(psi0, evolve_state(h, psi0, t, method=o["method"]), t)
    written = [artifacts.write_text(cfg.output_dir / "vpa.csv", vpa.to_csv(), meta)]
    if o["ensemble"]:
        params = SchwingerParams(n, o["x"], o["mu"], o["eps0"])
        lo, hi = o["detuning_range_khz"]
        hams = perturbed_hopping_ensemble(params, ChainSetup.default(n),
                                          np.linspace(lo, hi, o["ensemble"]) * 1e3)
        band = ensemble_band(hams, o["threshold"], psi0, t)
        extra = [f"central: mean, band: 1 sample std over {len(band.retained)} of {len(hams)}"]
        written.append(artifacts.write_text(cfg.output_dir / "vpa_band.csv",
                                            band.to_csv(header_lines=extra), meta))
    return EXIT_OK, written


def _cmd_raman(cfg, meta):
    from .raman import Polarization, RamanSetting, balanced_polarizations, polarization_report

    o = cfg.options
    blue, red = balanced_polarizations()
    if o["pol_red"]:
        red = Polarization([float(v) for v in o["pol_red"].split(",")])
    if o["pol_blue"]:
        blue = Polarization([float(v) for v in o["pol_blue"].split(",")])
    s = RamanSetting(o["detuning_ratio"] * o["omega_f"], o["omega_f"], o["phase"])
    rep = polarization_report(red, blue, s)
    path = artifacts.write_json(cfg.output_dir / "raman.json", rep, meta)
    print(artifacts.dumps(rep), end="")
    return EXIT_OK, [path]


def _cmd_report(cfg, meta):
    src = Path(cfg.options.get("dir") or cfg.output_dir)
    if not src.is_dir():
        raise FileNotFoundError(f"no such directory: {src}")
    files = {}
    for p in sorted(src.iterdir()):
        if not p.is_file() or p.name == "report.json":
            continue
        entry = {"sha256": hashlib.sha256(p.read_bytes()).hexdigest(), "bytes": p.stat().st_size}
        if p.suffix == ".json":
            d = json.loads(p.read_text())
            for key in ("passed", "feasible", "worst", "violations", "force_balanced",
                        "max_abs_residual", "relative_residual", "scheme"):
                if key in d:
                    entry[key] = d[key]
        files[p.name] = entry
    path = artifacts.write_json(cfg.output_dir / "report.json",
                                {"schema_version": 1, "files": files}, meta)
    return EXIT_OK, [path]


_COMMANDS = {"modes": _cmd_modes, "design": _cmd_design, "validate": _cmd_validate,
             "evolve": _cmd_evolve, "raman": _cmd_raman, "report": _cmd_report}


def run_command(cfg):
    """Execute ``cfg``; returns ``(exit_status, written_paths)``."""
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    if not os.access(cfg.output_dir, os.W_OK):
        raise PermissionError(f"output directory not writable: {cfg.output_dir}")
    meta = artifacts.metadata(cfg.canonical(), cfg.seed)
    return _COMMANDS[cfg.command](cfg, meta)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        for p in exc.problems:
            print(f"ionlgt: usage error: {p}", file=sys.stderr)
        return EXIT_ERROR
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            status, written = run_command(cfg)
    except Exception as exc:  # noqa: BLE001 - rendered with provenance
        mod = getattr(type(exc), "__module__", "?")
        print(f"ionlgt {cfg.command}: {mod}.{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for p in written:
        print(p)
    return status


if __name__ == "__main__":
    sys.exit(main())
