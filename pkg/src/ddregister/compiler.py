"""Compiles abstract nuclear gates into DD pulse schedules and calibration reports.

Every gate is a (unit time, repeat count) pair: the unit time picks the
rotation axes (conditional X at odd resonances, unconditional X at even
resonances, Z off resonance) and the repeats set the total angle,
N = round(target / phi_unit).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ._parallel import parallel_map
from .ddengine import (
    GateDecomposition,
    build_schedule,
    decompose_unit,
    dd_unitary_analytic,
    resonance_times,
)
from .linalg import I2, process_fidelity, rotation_matrix, tensor
from .metrics import entangling_power, metric_scan, residual_entangling_power, strongest_spectator
from .register import RegisterConfig, build_frames

TWO_PI = 2.0 * np.pi

DEFAULT_Z_WINDOW = (0.10, 0.25)  # us, below the first-order resonances at 338 G
Z_AXIS_MIN = 0.99  # |n_z| admissibility for Z gates, both branches
PAIR_MIN_ANTIALIGNMENT = -0.25  # pair designs need dot <= this at the crossing


class NoParallelEntanglerError(ValueError):
    """Raised when no (isolated) maximal parallel entangling gate exists."""


class CalibrationError(ValueError):
    """Raised when a gate cannot be calibrated (degenerate unit, empty window)."""


def _round_half_away(x: float) -> int:
    return int(np.floor(x + 0.5)) if x >= 0 else -int(np.floor(-x + 0.5))


@dataclass(frozen=True)
class CalibrationEntry:
    """One calibrated DD gate, mirroring the SM calibration-table columns."""

    gate: str
    targets: tuple[str, ...]
    unit_time: float
    repeats: int
    angular_error: float
    achieved_dot: float | None = None
    unit_angle: float | None = None
    epower: float | None = None

    @property
    def total_time(self) -> float:
        return self.unit_time * self.repeats

    def schedule(self):
        return build_schedule(self.unit_time, self.repeats)

    def to_dict(self) -> dict:
        out = {
            "gate": self.gate,
            "targets": list(self.targets),
            "t_us": self.unit_time,
            "repeats": self.repeats,
            "total_us": self.total_time,
            "angular_error_rad": self.angular_error,
        }
        if self.achieved_dot is not None:
            out["achieved_dot"] = self.achieved_dot
        if self.epower is not None:
            out["epower"] = self.epower
        return out


def _calibrate_at(
    cfg: RegisterConfig, nucleus: str, t: float, target_angle: float, gate: str
) -> CalibrationEntry:
    rot = decompose_unit(cfg, t).rotation(nucleus)
    if target_angle == 0.0:
        return CalibrationEntry(gate, (nucleus,), t, 0, 0.0, rot.dot, rot.bloch_angle)
    if rot.degenerate or rot.bloch_angle < 1e-9:
        raise CalibrationError(f"{nucleus}: degenerate unit rotation at t = {t!r}")
    n = _round_half_away(target_angle / rot.bloch_angle)
    err = abs(n * rot.bloch_angle - target_angle)
    return CalibrationEntry(gate, (nucleus,), t, n, err, rot.dot, rot.bloch_angle)


def calibrate_conditional_x(
    cfg: RegisterConfig, nucleus: str, order: int = 2, target_angle: float = np.pi / 2
) -> CalibrationEntry:
    """Conditional-X gate at the odd resonance m = 2k - 1 of the given order."""
    if order < 1:
        raise ValueError("order must be >= 1")
    (point,) = resonance_times(cfg, nucleus, [2 * order - 1])
    return _calibrate_at(cfg, nucleus, point.t_refined, target_angle, "CX")


def calibrate_unconditional_x(
    cfg: RegisterConfig, nucleus: str, order: int = 2, target_angle: float = np.pi / 2
) -> CalibrationEntry:
    """Unconditional-X gate at the even resonance m = 2k of the given order."""
    if order < 1:
        raise ValueError("order must be >= 1")
    (point,) = resonance_times(cfg, nucleus, [2 * order])
    return _calibrate_at(cfg, nucleus, point.t_refined, target_angle, "X")


def calibrate_z(
    cfg: RegisterConfig,
    nucleus: str,
    target_angle: float = np.pi / 2,
    n_fixed: int = 4,
    t_window: tuple[float, float] = DEFAULT_Z_WINDOW,
) -> CalibrationEntry:
    """Z gate: pick t in the off-resonant window so n_fixed units hit the angle.

    Admissible times must have z-dominant axes (|n_z| > 0.99 on both branches).
    """
    if target_angle == 0.0:
        t = 0.5 * (t_window[0] + t_window[1])
        rot = decompose_unit(cfg, t).rotation(nucleus)
        return CalibrationEntry("Z", (nucleus,), t, 0, 0.0, rot.dot, rot.bloch_angle)
    if n_fixed < 1:
        raise ValueError("n_fixed must be >= 1 for a nonzero target angle")
    per_unit = target_angle / n_fixed

    def angle_gap(t):
        return decompose_unit(cfg, t).rotation(nucleus).bloch_angle - per_unit

    lo, hi = t_window
    if angle_gap(lo) * angle_gap(hi) > 0:
        raise CalibrationError(
            f"{nucleus}: no unit time in [{lo}, {hi}] us reaches {per_unit!r} rad per unit"
        )
    t = brentq(angle_gap, lo, hi, xtol=1e-10)
    rot = decompose_unit(cfg, t).rotation(nucleus)
    if abs(rot.axis0[2]) < Z_AXIS_MIN or abs(rot.axis1[2]) < Z_AXIS_MIN:
        raise CalibrationError(f"{nucleus}: rotation axis not z-dominant at t = {t!r}")
    err = abs(n_fixed * rot.bloch_angle - target_angle)
    return CalibrationEntry("Z", (nucleus,), t, n_fixed, err, rot.dot, rot.bloch_angle)


def _negative_dot_window(cfg: RegisterConfig, targets, resolution: float = 5e-4):
    """Contiguous intervals where every target's dot is negative, edges refined."""
    frames = {fr.name: fr for fr in build_frames(cfg)}
    t_res = [4.0 * np.pi / (frames[n].omega[0] + frames[n].omega[1]) for n in targets]
    lo, hi = 0.75 * min(t_res), 1.3 * max(t_res)
    grid = np.arange(lo, hi, resolution)

    def worst_dot(t):
        dec = decompose_unit(cfg, float(t))
        return max(dec.rotation(n).dot for n in targets)

    values = np.array([worst_dot(t) for t in grid])
    segments = []
    start = None
    for i, v in enumerate(values):
        if v < 0 and start is None:
            start = i
        elif v >= 0 and start is not None:
            segments.append((grid[start], grid[i - 1]))
            start = None
    if start is not None:
        segments.append((grid[start], grid[-1]))
    refined = []
    for a, b in segments:
        a2 = brentq(worst_dot, a - resolution, a, xtol=1e-9) if worst_dot(a - resolution) >= 0 else a
        b2 = brentq(worst_dot, b, b + resolution, xtol=1e-9) if worst_dot(b + resolution) >= 0 else b
        refined.append((a2, b2))
    return refined


def design_parallel_entangler(
    cfg: RegisterConfig,
    targets,
    n_values=range(1, 13),
    min_antialignment: float = PAIR_MIN_ANTIALIGNMENT,
) -> CalibrationEntry:
    """Single-sequence maximal entangler over >= 2 target nuclei at first order.

    The unit time is the intersection of the two dot curves for pairs, or the
    midpoint of the common negative-dot window for three or more targets; the
    repeat count maximizes the entangling power (ties -> shortest gate).

    Raises NoParallelEntanglerError when the common negative-dot window is
    empty, or for pairs whose curves only cross at near-parallel axes
    (dot > min_antialignment): such crossings cannot make an isolated,
    robust maximal entangler (the {q1,q3} case of the shipped register).
    """
    targets = list(targets)
    if len(targets) < 2:
        raise ValueError("need at least two targets")
    for name in targets:
        cfg.index(name)  # raises for unknown nuclei
    windows = _negative_dot_window(cfg, targets)
    if not windows:
        raise NoParallelEntanglerError(
            f"no parallel entangler exists for {targets}: no common negative-dot window"
        )
    window = max(windows, key=lambda ab: ab[1] - ab[0])
    if len(targets) == 2:
        a, b = window
        q0, q1 = targets

        def gap(t):
            dec = decompose_unit(cfg, float(t))
            return dec.rotation(q0).dot - dec.rotation(q1).dot

        if gap(a) * gap(b) > 0:
            raise NoParallelEntanglerError(
                f"no parallel entangler exists for {targets}: "
                "dot curves do not intersect inside the common negative-dot window"
            )
        t_design = brentq(gap, a, b, xtol=1e-9)
        dec = decompose_unit(cfg, t_design)
        worst = max(dec.rotation(n).dot for n in targets)
        if worst > min_antialignment:
            raise NoParallelEntanglerError(
                f"no parallel entangler exists for {targets}: axes only weakly "
                f"anti-aligned at the crossing (dot = {worst:.3f} > {min_antialignment})"
            )
    else:
        t_design = 0.5 * (window[0] + window[1])
    grid = metric_scan(cfg, targets, [t_design], n_values)
    best = grid.best
    dec = decompose_unit(cfg, t_design)
    worst_dot = max(dec.rotation(n).dot for n in targets)
    # angular error quoted for the resonant anchor (most anti-aligned target);
    # off-resonant targets legitimately rotate beyond pi/2 to reach G1 = 0
    anchor = min(targets, key=lambda n: dec.rotation(n).dot)
    anchor_err = abs(best.repeats * dec.rotation(anchor).bloch_angle - np.pi / 2)
    return CalibrationEntry(
        "parallel-entangler",
        tuple(targets),
        t_design,
        best.repeats,
        anchor_err,
        worst_dot,
        None,
        best.epower,
    )


def design_parallel_z(
    cfg: RegisterConfig,
    targets,
    target_angle: float = np.pi / 2,
    n_fixed: int = 4,
    t_window: tuple[float, float] = DEFAULT_Z_WINDOW,
):
    """Parallelized Z gate: one unit time (mean of per-target Z calibrations).

    Returns the calibration entry plus the process fidelity of the analytic
    DD unitary against the ideal I_e (x) Z(angle)^(x)L on the electron+targets
    subregister.
    """
    targets = list(targets)
    if not targets:
        raise ValueError("target set must be nonempty")
    singles = [calibrate_z(cfg, n, target_angle, n_fixed, t_window) for n in targets]
    t_bar = float(np.mean([e.unit_time for e in singles]))
    sub = cfg.restrict(targets)
    repeats = singles[0].repeats
    u_actual, dec = dd_unitary_analytic(sub, t_bar, repeats)
    z_ideal = rotation_matrix((0.0, 0.0, 1.0), target_angle)
    u_ideal = tensor([I2] + [z_ideal] * len(targets))
    fp = process_fidelity(u_actual, u_ideal)
    if repeats:
        err = float(
            np.mean([abs(repeats * dec.rotation(n).bloch_angle - target_angle) for n in targets])
        )
    else:
        err = 0.0
    entry = CalibrationEntry("parallel-Z", tuple(targets), t_bar, repeats, err)
    return entry, fp


@dataclass(frozen=True)
class FieldScanRow:
    field_gauss: float
    order: int
    nucleus: str
    cx_t: float
    cx_repeats: int
    cx_error: float
    x_t: float
    x_repeats: int
    x_error: float
    x_time_smooth: float  # unrounded-N unconditional gate time, us


@dataclass
class FieldScanResult:
    rows: list[FieldScanRow]
    recommended_fields: list[float]

    def header(self) -> list[str]:
        return [
            "field_gauss", "order", "nucleus",
            "cx_t_us", "cx_repeats", "cx_total_us", "cx_error_rad",
            "x_t_us", "x_repeats", "x_total_us", "x_error_rad", "x_time_smooth_us",
        ]

    def table_rows(self):
        for r in self.rows:
            yield [
                r.field_gauss, r.order, r.nucleus,
                r.cx_t, r.cx_repeats, r.cx_t * r.cx_repeats, r.cx_error,
                r.x_t, r.x_repeats, r.x_t * r.x_repeats, r.x_error, r.x_time_smooth,
            ]

    def mean_conditional_error(self, orders=(1, 2)) -> dict[float, float]:
        """Mean |angular error| of conditional gates over nuclei and the given orders."""
        acc: dict[float, list[float]] = {}
        for r in self.rows:
            if r.order in orders:
                acc.setdefault(r.field_gauss, []).append(r.cx_error)
        return {b: float(np.mean(v)) for b, v in sorted(acc.items())}


def field_scan(
    cfg: RegisterConfig,
    b_values,
    orders=(1, 2, 3),
    nuclei=None,
    target_angle: float = np.pi / 2,
    threads: int = 1,
) -> FieldScanResult:
    """Calibrate CX/X gates across magnetic field strengths.

    Recommended fields are the local minima of the mean first+second order
    conditional angular error over the scanned nuclei.
    """
    b_values = [float(b) for b in b_values]
    if not b_values or min(b_values) <= 0:
        raise ValueError("field values must be positive")
    if nuclei is None:
        nuclei = list(cfg.names[: min(3, cfg.n_nuclei)])

    def scan_one(b):
        c = cfg.with_field(b)
        rows = []
        for order in orders:
            for name in nuclei:
                cx = calibrate_conditional_x(c, name, order, target_angle)
                x = calibrate_unconditional_x(c, name, order, target_angle)
                smooth = (target_angle / x.unit_angle) * x.unit_time
                rows.append(
                    FieldScanRow(
                        b, order, name,
                        cx.unit_time, cx.repeats, cx.angular_error,
                        x.unit_time, x.repeats, x.angular_error, smooth,
                    )
                )
        return rows

    rows = [r for chunk in parallel_map(scan_one, b_values, threads) for r in chunk]
    result = FieldScanResult(rows, [])
    mean_err = result.mean_conditional_error(orders=tuple(o for o in orders if o in (1, 2)))
    fields = sorted(mean_err)
    errs = [mean_err[b] for b in fields]
    recommended = []
    for i in range(len(fields)):
        left = errs[i - 1] if i > 0 else np.inf
        right = errs[i + 1] if i < len(fields) - 1 else np.inf
        if errs[i] < left and errs[i] <= right:
            recommended.append(fields[i])
    result.recommended_fields = recommended
    return result


def paper_calibration_table(cfg: RegisterConfig, nuclei=("q1", "q2", "q3")) -> list[CalibrationEntry]:
    """The nine pi/2 calibrations of the SM table: CX, X (order 2) and Z (N=4)."""
    entries = [calibrate_conditional_x(cfg, n, 2) for n in nuclei]
    entries += [calibrate_unconditional_x(cfg, n, 2) for n in nuclei]
    entries += [calibrate_z(cfg, n) for n in nuclei]
    return entries
