"""Command-line entry point: compilation, simulation, and fitting as reproducible runs.

Every subcommand is pure given (config, flags, seed): it writes its products
plus a manifest.json into the output directory, with locale-independent
formatting (17 significant digits) so outputs are bitwise reproducible.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__
from ._parallel import default_threads
from .circuits import Backend, dd_spectroscopy, mqc_experiment, repetition_experiment
from .compiler import (
    CalibrationError,
    NoParallelEntanglerError,
    calibrate_conditional_x,
    calibrate_unconditional_x,
    calibrate_z,
    design_parallel_entangler,
    design_parallel_z,
    field_scan,
    paper_calibration_table,
)
from .ddengine import ImperfectPulseParams, PulseError, axis_alignment_scan, resonance_times
from .fitting import fit_gate_error, fit_sinusoid, optimize_ghz_prep
from .metrics import metric_scan, residual_entangling_power, strongest_spectator
from .register import load_register, paper_register

DOMAIN_ERRORS = (NoParallelEntanglerError, CalibrationError, ValueError, KeyError)


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _parse_cell(v: str):
    try:
        return float(v)
    except ValueError:
        return v


def read_csv(path):
    with open(path, "r", newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = [[_parse_cell(v) for v in row] for row in r]
    return header, rows


def write_json(path, data) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


class Run:
    """Output directory plus the manifest accumulated over a run."""

    def __init__(self, args, command: str):
        self.out_dir = args.out_dir
        os.makedirs(self.out_dir, exist_ok=True)
        self.manifest = {
            "command": command,
            "config": args.config or "<paper preset>",
            "seed": args.seed,
            "artifact_version": __version__,
            "parameters": {
                k: v
                for k, v in sorted(vars(args).items())
                if k not in ("func", "config", "seed", "out_dir") and v is not None
            },
            "outputs": [],
        }

    def path(self, name: str) -> str:
        p = os.path.join(self.out_dir, name)
        self.manifest["outputs"].append(name)
        return p

    def finish(self, extra: dict | None = None) -> None:
        if extra:
            self.manifest.update(extra)
        write_json(os.path.join(self.out_dir, "manifest.json"), self.manifest)


def _load_cfg(args):
    return load_register(args.config) if args.config else paper_register()


def _qubits(text: str) -> list[str]:
    return [q.strip() for q in text.split(",") if q.strip()]


def _noise_from_file(path) -> ImperfectPulseParams:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)

    def pe(key):
        d = data.get(key, {})
        return PulseError(float(d.get("angle_error", 0.0)), tuple(d.get("off_axis", (0.0, 0.0))))

    return ImperfectPulseParams(pe("x_pi"), pe("y_pi"), pe("x_half"), pe("y_half"))


def _backend(args, cfg) -> Backend:
    noise = None
    if args.backend == "compiled+noise":
        noise = _noise_from_file(args.noise) if getattr(args, "noise", None) else ImperfectPulseParams(
            PulseError(0.02, (0.02, 0.01)),
            PulseError(0.015, (0.015, 0.02)),
            PulseError(0.01, (0.01, 0.015)),
            PulseError(0.012, (0.02, 0.01)),
        )
    return Backend(cfg, args.backend, noise)


# --------------------------------------------------------------------------
# subcommands


def cmd_resonances(args):
    cfg = _load_cfg(args)
    run = Run(args, "resonances")
    orders = [int(k) for k in _qubits(args.orders)]
    out = []
    for k in orders:
        cond = resonance_times(cfg, args.qubit, [2 * k - 1])[0]
        unc = resonance_times(cfg, args.qubit, [2 * k])[0]
        out.append(
            {
                "order": k,
                "conditional": {"m": cond.m, "t_m_us": cond.t_approx, "t_refined_us": cond.t_refined},
                "unconditional": {"m": unc.m, "t_m_us": unc.t_approx, "t_refined_us": unc.t_refined},
            }
        )
    write_json(run.path(f"resonances_{args.qubit}.json"), {"qubit": args.qubit, "orders": out})
    run.finish()
    return 0


def cmd_scan(args):
    cfg = _load_cfg(args)
    run = Run(args, "scan")
    t_values = np.arange(args.t_min, args.t_max + args.t_step / 2, args.t_step)
    if args.kind == "alignment":
        scan = axis_alignment_scan(cfg, t_values, threads=args.threads)
        write_csv(run.path("alignment.csv"), scan.header(), scan.rows())
        run.finish()
        return 0
    targets = _qubits(args.qubits)
    grid = metric_scan(cfg, targets, t_values, range(args.n_min, args.n_max + 1), threads=args.threads)
    write_csv(run.path("metrics.csv"), grid.header(), grid.rows())
    run.finish(
        {
            "argmax": {"t_us": grid.best.t, "repeats": grid.best.repeats, "epower": grid.best.epower},
            "no_maximal_entangler": grid.no_maximal_entangler,
        }
    )
    return 0


def cmd_spectroscopy(args):
    cfg = _load_cfg(args)
    run = Run(args, "spectroscopy")
    t_values = np.arange(args.t_min, args.t_max + args.t_step / 2, args.t_step)
    include = _qubits(args.include) if args.include else None
    result = dd_spectroscopy(cfg, t_values, args.repeats, include, threads=args.threads)
    write_csv(run.path("spectroscopy.csv"), result.header(), result.rows())
    run.finish()
    return 0


def cmd_calibrate(args):
    cfg = _load_cfg(args)
    run = Run(args, "calibrate")
    angle = args.angle
    if args.gate == "table":
        entries = paper_calibration_table(cfg)
        write_json(run.path("calibration_table.json"), [e.to_dict() for e in entries])
        run.finish()
        return 0
    if args.gate == "parallel-z":
        entry, fp = design_parallel_z(cfg, _qubits(args.qubits), angle)
        data = entry.to_dict()
        data["process_fidelity"] = fp
        write_json(run.path("calibration.json"), data)
        run.finish()
        return 0
    if not args.qubit:
        raise CalibrationError("gate calibration needs --qubit")
    if args.gate == "cx":
        entry = calibrate_conditional_x(cfg, args.qubit, args.order, angle)
    elif args.gate == "x":
        entry = calibrate_unconditional_x(cfg, args.qubit, args.order, angle)
    else:
        entry = calibrate_z(cfg, args.qubit, angle)
    write_json(run.path("calibration.json"), entry.to_dict())
    run.finish()
    return 0


def cmd_design_parallel(args):
    cfg = _load_cfg(args)
    run = Run(args, "design-parallel")
    targets = _qubits(args.qubits)
    entry = design_parallel_entangler(cfg, targets)
    data = entry.to_dict()
    data["duration_us"] = entry.total_time
    if len(targets) < cfg.n_nuclei:
        data["residual_epower"] = residual_entangling_power(cfg, targets, entry.unit_time, entry.repeats)
        data["residual_spectator"] = strongest_spectator(cfg, targets)
    write_json(run.path("design.json"), data)
    run.finish()
    return 0


def cmd_simulate_mqc(args):
    cfg = _load_cfg(args)
    run = Run(args, "simulate mqc")
    backend = _backend(args, cfg)
    targets = _qubits(args.qubits)
    phi = np.arange(0.0, args.phi_max + 1e-9, args.phi_step)
    prep = None
    if args.optimize:
        ghz = optimize_ghz_prep(backend, targets, args.mode, seed=args.seed)
        prep = {q: ghz.angles[q] for q in targets}
        write_json(run.path("ghz_prep.json"), ghz.to_dict())
    result = mqc_experiment(backend, args.mode, targets, phi, prep)
    write_csv(run.path("mqc.csv"), result.header(), result.rows())
    model = fit_sinusoid(result.phi, result.p0, tones=args.tones)
    write_json(run.path("fit.json"), model.to_dict())
    run.finish({"fitted_l": model.l})
    return 0


def cmd_simulate_repeat(args):
    cfg = _load_cfg(args)
    run = Run(args, "simulate repeat")
    backend = _backend(args, cfg)
    targets = _qubits(args.qubits)
    n_values = [int(v) for v in _qubits(args.n_values)]
    result = repetition_experiment(backend, args.kind, targets, n_values)
    write_csv(run.path("repeat.csv"), result.header(), result.rows())
    run.finish()
    return 0


def cmd_fit_mqc(args):
    run = Run(args, "fit mqc")
    header, rows = read_csv(args.infile)
    if header[:2] != ["phi_rad", "p0_electron"]:
        raise CalibrationError(f"unexpected CSV columns {header!r}")
    phi = np.array([r[0] for r in rows])
    p0 = np.array([r[1] for r in rows])
    model = fit_sinusoid(phi, p0, tones=args.tones)
    write_json(run.path("fit.json"), model.to_dict())
    run.finish({"fitted_l": model.l})
    return 0


def cmd_fit_gatefid(args):
    run = Run(args, "fit gatefid")
    header, rows = read_csv(args.infile)
    if header[0] != "N_E":
        raise CalibrationError(f"unexpected CSV columns {header!r}")
    m = args.m
    data = []
    for r in rows:
        n_e = int(r[0])
        zs = r[1 : 1 + m]
        f = float(np.prod([(1.0 + z) / 2.0 for z in zs]))
        data.append((n_e, f))
    initial_states = None
    if args.kind == "parallel":
        cfg = _load_cfg(args)
        backend = Backend(cfg, "ideal")
        from .circuits import ideal_repetition_states

        initial_states = ideal_repetition_states(backend, _qubits(args.qubits), [n for n, _ in data])
    fit = fit_gate_error(data, m, initial_states)
    write_json(run.path("gatefit.json"), fit.to_dict())
    run.finish({"gate_fidelity": fit.gate_fidelity})
    return 0


def cmd_scan_field(args):
    cfg = _load_cfg(args)
    run = Run(args, "scan-field")
    b_values = np.arange(args.b_min, args.b_max + args.b_step / 2, args.b_step)
    orders = tuple(int(k) for k in _qubits(args.orders))
    result = field_scan(cfg, b_values, orders, threads=args.threads)
    write_csv(run.path("fieldscan.csv"), result.header(), result.table_rows())
    run.finish({"recommended_fields_gauss": result.recommended_fields})
    return 0


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ddregister",
        description="Compile, simulate, and fit DD gates on a central-spin register.",
    )
    p.add_argument("--version", action="version", version=f"ddregister {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="register JSON (default: shipped paper register)")
    common.add_argument("--out-dir", default="ddregister-out", help="output directory")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=default_threads())
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("resonances", parents=[common], help="resonance times for one nucleus")
    s.add_argument("--qubit", required=True)
    s.add_argument("--orders", default="1,2,3")
    s.set_defaults(func=cmd_resonances)

    s = sub.add_parser("scan", parents=[common], help="axis-alignment or metric scans")
    s.add_argument("--kind", choices=["alignment", "metrics"], default="alignment")
    s.add_argument("--t-min", type=float, required=True)
    s.add_argument("--t-max", type=float, required=True)
    s.add_argument("--t-step", type=float, default=0.002)
    s.add_argument("--qubits", default="q1,q2,q3")
    s.add_argument("--n-min", type=int, default=1)
    s.add_argument("--n-max", type=int, default=12)
    s.set_defaults(func=cmd_scan)

    s = sub.add_parser("spectroscopy", parents=[common], help="DD spectroscopy signal")
    s.add_argument("--t-min", type=float, required=True)
    s.add_argument("--t-max", type=float, required=True)
    s.add_argument("--t-step", type=float, default=0.004)
    s.add_argument("--repeats", type=int, default=12)
    s.add_argument("--include", help="comma-separated nuclei (default: all)")
    s.set_defaults(func=cmd_spectroscopy)

    s = sub.add_parser("calibrate", parents=[common], help="calibrate one gate or the full table")
    s.add_argument("--gate", choices=["cx", "x", "z", "parallel-z", "table"], required=True)
    s.add_argument("--qubit")
    s.add_argument("--qubits", default="q1,q2,q3")
    s.add_argument("--order", type=int, default=2)
    s.add_argument("--angle", type=float, default=np.pi / 2)
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("design-parallel", parents=[common], help="design a parallel entangler")
    s.add_argument("--qubits", required=True)
    s.set_defaults(func=cmd_design_parallel)

    sim = sub.add_parser("simulate", help="simulate a protocol circuit")
    sim_sub = sim.add_subparsers(dest="experiment", required=True)

    s = sim_sub.add_parser("mqc", parents=[common], help="multiple-quantum-coherence run")
    s.add_argument("--mode", choices=["bipartite", "sequential", "parallel"], required=True)
    s.add_argument("--qubits", required=True)
    s.add_argument("--backend", choices=["ideal", "compiled", "compiled+noise"], default="ideal")
    s.add_argument("--noise", help="JSON file with pulse-error parameters")
    s.add_argument("--optimize", action="store_true", help="optimize GHZ prep angles")
    s.add_argument("--phi-max", type=float, default=4 * np.pi)
    s.add_argument("--phi-step", type=float, default=np.pi / 6)
    s.add_argument("--tones", type=int, choices=[1, 2], default=1)
    s.set_defaults(func=cmd_simulate_mqc)

    s = sim_sub.add_parser("repeat", parents=[common], help="repeated-entangler fidelity run")
    s.add_argument("--kind", choices=["cx", "sequential", "parallel"], required=True)
    s.add_argument("--qubits", required=True)
    s.add_argument("--backend", choices=["ideal", "compiled", "compiled+noise"], default="ideal")
    s.add_argument("--noise", help="JSON file with pulse-error parameters")
    s.add_argument("--n-values", required=True, help="comma-separated N_E values")
    s.set_defaults(func=cmd_simulate_repeat)

    s = sim_sub.add_parser("spectroscopy", parents=[common], help="alias of the spectroscopy command")
    s.add_argument("--t-min", type=float, required=True)
    s.add_argument("--t-max", type=float, required=True)
    s.add_argument("--t-step", type=float, default=0.004)
    s.add_argument("--repeats", type=int, default=12)
    s.add_argument("--include")
    s.set_defaults(func=cmd_spectroscopy)

    s = sub.add_parser("fit", help="fit a previously simulated signal")
    fit_sub = s.add_subparsers(dest="what", required=True)

    f = fit_sub.add_parser("mqc", parents=[common], help="fit MQC tones")
    f.add_argument("--in", dest="infile", required=True)
    f.add_argument("--tones", type=int, choices=[1, 2], default=1)
    f.set_defaults(func=cmd_fit_mqc)

    f = fit_sub.add_parser("gatefid", parents=[common], help="fit SPAM/gate error rates")
    f.add_argument("--in", dest="infile", required=True)
    f.add_argument("--m", type=int, required=True, help="total qubit count M")
    f.add_argument("--kind", choices=["cx", "sequential", "parallel"], default="cx")
    f.add_argument("--qubits", default="q1,q2,q3")
    f.set_defaults(func=cmd_fit_gatefid)

    s = sub.add_parser("scan-field", parents=[common], help="calibrations across field strengths")
    s.add_argument("--b-min", type=float, default=250.0)
    s.add_argument("--b-max", type=float, default=700.0)
    s.add_argument("--b-step", type=float, default=2.0)
    s.add_argument("--orders", default="1,2")
    s.set_defaults(func=cmd_scan_field)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    os.environ.setdefault("DDREGISTER_THREADS", str(args.threads))
    try:
        return args.func(args)
    except DOMAIN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
