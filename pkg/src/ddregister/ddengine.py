"""DD sequences: schedule representation, net unitaries, axis/angle extraction,
resonance finding.

A "unit" is the 2-pulse CPMG-style block of duration t (delays t/4 - t/2 - t/4);
one XY8 block spans 4 units with 8 pulses, and N counts units, so a schedule
carries 2N pi-pulses in total. Plans use as much XY8 as possible and
interpolate the remainder with CPMG / XY4 / XY6 for N = 1, 2, 3 (mod 4).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import I2, PAULIS, rotation_matrix, tensor
from .register import RegisterConfig, build_frames, free_evolution

TWO_PI = 2.0 * np.pi

# pulse axes per family; a family named XYn carries n pi-pulses over n/2 units
FAMILY_AXES = {
    "CPMG": "xx",
    "XY4": "xyxy",
    "XY6": "xyxxyx",
    "XY8": "xyxyyxyx",
}


@dataclass(frozen=True)
class PulseSchedule:
    """A DD gate: unit time t (us), N unit repeats, and the pulse timeline.

    `family_plan` lists (family, count) pairs consuming exactly N units;
    `pulse_timeline` holds (timestamp_us, axis) for every pi-pulse, with the
    t/4 - pi - t/2 - ... - t/4 spacing inside each family block.
    """

    unit_time: float
    repeats: int
    family_plan: tuple[tuple[str, int], ...]
    pulse_timeline: tuple[tuple[float, str], ...]

    @property
    def duration(self) -> float:
        return self.unit_time * self.repeats

    @property
    def n_pulses(self) -> int:
        return len(self.pulse_timeline)

    def segments(self):
        """Delays and pulses in order: yields ('free', dt) and ('pulse', axis)."""
        prev = 0.0
        for ts, axis in self.pulse_timeline:
            yield ("free", ts - prev)
            yield ("pulse", axis)
            prev = ts
        yield ("free", self.duration - prev)


def build_schedule(unit_time: float, repeats: int) -> PulseSchedule:
    """Assemble the XY8-plus-remainder plan for N repeats of unit time t."""
    if unit_time <= 0 and repeats > 0:
        raise ValueError("unit_time must be positive")
    if repeats < 0:
        raise ValueError("repeats must be >= 0")
    plan = []
    if repeats // 4:
        plan.append(("XY8", repeats // 4))
    rem = repeats % 4
    if rem:
        plan.append(({1: "CPMG", 2: "XY4", 3: "XY6"}[rem], 1))
    timeline = []
    t0 = 0.0
    for family, count in plan:
        axes = FAMILY_AXES[family]
        for _ in range(count):
            ts = t0 + unit_time / 4.0
            for i, axis in enumerate(axes):
                timeline.append((ts, axis))
                ts += unit_time / 2.0
            t0 += unit_time * (len(axes) // 2)
    return PulseSchedule(unit_time, repeats, tuple(plan), tuple(timeline))


@dataclass(frozen=True)
class NuclearRotation:
    """Extracted per-unit conditional rotation of one nucleus.

    `angle` is the canonical rotation angle in [0, 2pi] (sin(angle/2) >= 0) so
    that rotation_matrix(axis_j, angle) reconstructs the unit block exactly;
    `bloch_angle` = min(angle, 2pi - angle) is the geometric step used for
    repeat calibration. `degenerate` flags an identity unit (axis undefined,
    dot reported as +1).
    """

    name: str
    axis0: np.ndarray
    axis1: np.ndarray
    angle: float
    degenerate: bool = False

    @property
    def dot(self) -> float:
        return float(np.dot(self.axis0, self.axis1))

    @property
    def bloch_angle(self) -> float:
        return min(self.angle, TWO_PI - self.angle)


@dataclass(frozen=True)
class GateDecomposition:
    """Electron-block form of a DD unitary: per-nucleus axes and shared angles."""

    unit_time: float
    repeats: int
    rotations: tuple[NuclearRotation, ...]

    def rotation(self, name: str) -> NuclearRotation:
        for r in self.rotations:
            if r.name == name:
                return r
        raise KeyError(f"no nucleus named {name!r} in decomposition")

    def total_angle(self, name: str) -> float:
        return self.repeats * self.rotation(name).angle


def extract_rotation(r: np.ndarray, name: str = "", tol: float = 1e-9) -> NuclearRotation:
    """Canonical (axis, angle) of an SU(2) rotation via the trace identities.

    angle = 2 arccos(tr(R)/2) in [0, 2pi]; n_k = i tr(sigma_k R)/(2 sin(angle/2)).
    """
    c = float(np.clip(np.trace(r).real / 2.0, -1.0, 1.0))
    angle = 2.0 * np.arccos(c)
    s = np.sin(angle / 2.0)
    if abs(s) < tol:
        axis = np.array([0.0, 0.0, 1.0])
        return NuclearRotation(name, axis, axis, angle, degenerate=True)
    axis = np.array([(1.0j * np.trace(p @ r) / (2.0 * s)).real for p in PAULIS])
    return NuclearRotation(name, axis, axis, angle)


def unit_rotations(cfg: RegisterConfig, t: float):
    """Per-nucleus 2x2 single-unit DD rotations (R0, R1) for both branches."""
    frames = build_frames(cfg)
    out = []
    for fr in frames:
        f = [rotation_matrix(fr.axis[j], fr.omega[j] * tau) for j, tau in ((0, t / 4), (1, t / 4))]
        h = [rotation_matrix(fr.axis[j], fr.omega[j] * t / 2) for j in (0, 1)]
        r0 = f[0] @ h[1] @ f[0]
        r1 = f[1] @ h[0] @ f[1]
        out.append((r0, r1))
    return out


def _quat_mul(w1, v1, w2, v2):
    # (w I - i v.sigma)(w' I - i v'.sigma) composition rule
    a1, b1, c1 = v1
    a2, b2, c2 = v2
    w = w1 * w2 - (a1 * a2 + b1 * b2 + c1 * c2)
    v = np.array(
        [
            w1 * a2 + w2 * a1 + b1 * c2 - c1 * b2,
            w1 * b2 + w2 * b1 + c1 * a2 - a1 * c2,
            w1 * c2 + w2 * c1 + a1 * b2 - b1 * a2,
        ]
    )
    return w, v


def decompose_unit(cfg: RegisterConfig, t: float) -> GateDecomposition:
    """Axis/angle extraction of the single-unit DD rotations via trace identities.

    The per-unit angle is identical for both electron branches; a degenerate
    unit (sin(angle/2) = 0) keeps axis z and reports dot = +1. Rotations are
    composed in (scalar, vector) quaternion form, which is equivalent to the
    2x2 matrix product and yields the canonical angle/axis directly.
    """
    frames = build_frames(cfg)
    rotations = []
    for fr in frames:
        half = [fr.omega[j] * t / 8.0 for j in (0, 1)]  # quarter-period half-angles
        quarts = [(np.cos(h), np.sin(h) * fr.axis[j]) for j, h in enumerate(half)]
        mids = [
            (np.cos(2.0 * h), np.sin(2.0 * h) * fr.axis[j]) for j, h in enumerate(half)
        ]
        branch = []
        for j in (0, 1):
            w, v = _quat_mul(*quarts[j], *mids[1 - j])
            w, v = _quat_mul(w, v, *quarts[j])
            branch.append((w, v))
        (w0, v0), (w1, v1) = branch
        s0 = float(np.linalg.norm(v0))
        angle = 2.0 * np.arctan2(s0, w0)
        if s0 < 1e-9:
            z = np.array([0.0, 0.0, 1.0])
            rotations.append(NuclearRotation(fr.name, z, z, angle, degenerate=True))
        else:
            rotations.append(
                NuclearRotation(fr.name, v0 / s0, v1 / np.linalg.norm(v1), angle)
            )
    return GateDecomposition(t, 1, tuple(rotations))


def dd_unitary_analytic(cfg: RegisterConfig, t: float, repeats: int):
    """Analytic DD unitary sum_j |j><j| (x) prod_l R_{n_j}(N*phi) plus its decomposition."""
    if repeats < 0:
        raise ValueError("repeats must be >= 0")
    if repeats == 0:
        dec = GateDecomposition(
            t,
            0,
            tuple(
                NuclearRotation(s.name, np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.0, 1.0]), 0.0, True)
                for s in cfg.nuclei
            ),
        )
        return np.eye(2**cfg.n_sites, dtype=complex), dec
    unit = decompose_unit(cfg, t)
    dec = GateDecomposition(t, repeats, unit.rotations)
    blocks = []
    for j in (0, 1):
        b = np.array([[1.0]], dtype=complex)
        for rot in dec.rotations:
            axis = rot.axis0 if j == 0 else rot.axis1
            b = np.kron(b, rotation_matrix(axis, repeats * rot.angle))
        blocks.append(b)
    d = blocks[0].shape[0]
    u = np.zeros((2 * d, 2 * d), dtype=complex)
    u[:d, :d] = blocks[0]
    u[d:, d:] = blocks[1]
    return u, dec


@dataclass(frozen=True)
class PulseError:
    """Coherent error of one electron pulse: angle error plus off-axis tilt.

    For X pulses the actual axis is (sqrt(1-e1^2-e2^2), e1, e2); for Y pulses
    it is (e1, sqrt(1-e1^2-e2^2), e2). The rotation angle is nominal + 2*angle_error.
    """

    angle_error: float = 0.0
    off_axis: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        e1, e2 = self.off_axis
        if e1 * e1 + e2 * e2 > 1.0:
            raise ValueError("off-axis components exceed unit norm")


@dataclass(frozen=True)
class ImperfectPulseParams:
    """Coherent error model for the four electron control pulses."""

    x_pi: PulseError = PulseError()
    y_pi: PulseError = PulseError()
    x_half: PulseError = PulseError()
    y_half: PulseError = PulseError()

    def unitary(self, axis: str, angle: float) -> np.ndarray:
        """Imperfect 2x2 pulse unitary for a nominal +/-(pi or pi/2) rotation.

        Negative nominal angles use the conjugate of the positive-angle pulse
        (phase-inverted drive, mirrored error).
        """
        nominal = abs(angle)
        if abs(nominal - np.pi) < 1e-12:
            err = self.x_pi if axis == "x" else self.y_pi
        elif abs(nominal - np.pi / 2) < 1e-12:
            err = self.x_half if axis == "x" else self.y_half
        else:
            raise ValueError(f"no error model for a {axis} pulse of angle {angle!r}")
        e1, e2 = err.off_axis
        main = np.sqrt(max(0.0, 1.0 - e1 * e1 - e2 * e2))
        vec = np.array([main, e1, e2]) if axis == "x" else np.array([e1, main, e2])
        u = rotation_matrix(vec, nominal + 2.0 * err.angle_error)
        return u.conj().T if angle < 0 else u


IDEAL_PULSES = ImperfectPulseParams()


def electron_pulse(axis: str, angle: float, n_nuclei: int, noise: ImperfectPulseParams | None) -> np.ndarray:
    if noise is None:
        p = rotation_matrix({"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0)}[axis], angle)
    else:
        p = noise.unitary(axis, angle)
    return tensor([p] + [I2] * n_nuclei)


def dd_unitary_pulsed(
    cfg: RegisterConfig, schedule: PulseSchedule, noise: ImperfectPulseParams | None = None
) -> np.ndarray:
    """Ordered product of free-evolution segments and (imperfect) electron pi-pulses.

    Noise-free this equals `dd_unitary_analytic` up to a global phase.
    """
    dim = 2**cfg.n_sites
    u = np.eye(dim, dtype=complex)
    free_cache: dict[float, np.ndarray] = {}
    pulse_cache: dict[str, np.ndarray] = {}
    for kind, value in schedule.segments():
        if kind == "free":
            if value < 1e-15:
                continue
            if value not in free_cache:
                free_cache[value] = free_evolution(cfg, value)
            u = free_cache[value] @ u
        else:
            if value not in pulse_cache:
                pulse_cache[value] = electron_pulse(value, np.pi, cfg.n_nuclei, noise)
            u = pulse_cache[value] @ u
    return u


def golden_section_minimize(f, a: float, b: float, tol: float = 1e-6) -> float:
    """Golden-section minimum of a unimodal f on [a, b] to within tol."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


@dataclass(frozen=True)
class ResonancePoint:
    m: int
    t_approx: float
    t_refined: float


def resonance_times(cfg: RegisterConfig, nucleus: str, m_values) -> list[ResonancePoint]:
    """Approximate resonance times t_m = 4*pi*m/(w0+w1) plus numeric refinements.

    Odd m (conditional): refine by minimizing dot + 1 within +/-2% of t_m.
    Even m (unconditional): the dot is a flat plateau there, so refine to the
    stationary point of the per-unit rotation angle (the pure-X-axis point).
    """
    idx = cfg.index(nucleus)
    fr = build_frames(cfg)[idx]
    w_sum = fr.omega[0] + fr.omega[1]
    sub = cfg.restrict([nucleus])
    out = []
    for m in m_values:
        m = int(m)
        if m < 1:
            raise ValueError("m must be >= 1")
        tm = 4.0 * np.pi * m / w_sum
        if m % 2 == 1:
            f = lambda t: decompose_unit(sub, t).rotations[0].dot + 1.0
        else:
            f = lambda t: decompose_unit(sub, t).rotations[0].bloch_angle
        tr = golden_section_minimize(f, 0.98 * tm, 1.02 * tm, tol=1e-6)
        out.append(ResonancePoint(m, tm, tr))
    return out


@dataclass
class AlignmentScan:
    """Axis-alignment table over unit pulse times: per-nucleus dot and per-unit angle."""

    names: tuple[str, ...]
    t_values: np.ndarray
    dots: np.ndarray  # shape (nt, n_nuclei)
    angles: np.ndarray  # canonical per-unit angles, same shape

    def header(self) -> list[str]:
        return (
            ["t_us"]
            + [f"dot_{n}" for n in self.names]
            + [f"phi_{n}" for n in self.names]
        )

    def rows(self):
        for i, t in enumerate(self.t_values):
            yield [float(t)] + list(map(float, self.dots[i])) + list(map(float, self.angles[i]))


def axis_alignment_scan(cfg: RegisterConfig, t_values, threads: int = 1) -> AlignmentScan:
    """dot(n0, n1) and per-unit angle for every nucleus over a grid of unit times."""
    t_values = np.asarray(list(t_values), dtype=float)
    if t_values.size == 0 or np.any(t_values <= 0):
        raise ValueError("t grid must be positive")

    def point(t):
        dec = decompose_unit(cfg, float(t))
        return (
            [r.dot for r in dec.rotations],
            [r.angle for r in dec.rotations],
        )

    from ._parallel import parallel_map

    results = parallel_map(point, t_values, threads)
    dots = np.array([r[0] for r in results])
    angles = np.array([r[1] for r in results])
    return AlignmentScan(cfg.names, t_values, dots, angles)
