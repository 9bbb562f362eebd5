"""Gate-level circuit IR, execution backends, and the protocol circuits.

Backends share one instruction set and differ in gate realization:

* ``ideal``      - crosstalk-free gates with exact angles; the parallel
                   entangler keeps its designed geometry but acts on the
                   targets only.
* ``compiled``   - every nuclear instruction is a calibrated DD pulse
                   schedule simulated pulse-by-pulse on the full register
                   (crosstalk included), electron pulses ideal.
* ``compiled+noise`` - as compiled, with the coherent electron-pulse error
                   model applied to every pulse.

Electron Z rotations are virtual (exact, zero duration) in all backends.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import compiler
from .ddengine import (
    ImperfectPulseParams,
    build_schedule,
    decompose_unit,
    dd_unitary_pulsed,
    electron_pulse,
)
from .linalg import (
    I2,
    SZ,
    DensityState,
    debug_checks_enabled,
    embed,
    partial_trace,
    rotation_matrix,
    tensor,
)
from .register import RegisterConfig

TWO_PI = 2.0 * np.pi


# --------------------------------------------------------------------------
# instruction set


@dataclass(frozen=True)
class ElectronRotation:
    axis: str  # 'x', 'y' or 'z'
    angle: float


@dataclass(frozen=True)
class NuclearLocal:
    target: str
    kind: str  # 'x' or 'z'
    angle: float


@dataclass(frozen=True)
class ConditionalX:
    target: str
    angle: float


@dataclass(frozen=True)
class ParallelEntangler:
    targets: tuple[str, ...]


@dataclass(frozen=True)
class ParallelZ:
    targets: tuple[str, ...]
    angle: float


@dataclass(frozen=True)
class ElectronReset:
    pass


@dataclass(frozen=True)
class MeasureZ:
    subject: str  # 'e' or a nucleus name


Instruction = (
    ElectronRotation | NuclearLocal | ConditionalX | ParallelEntangler | ParallelZ | ElectronReset | MeasureZ
)

_OP_NAMES = {
    ElectronRotation: "electron-rotation",
    NuclearLocal: "nuclear-local",
    ConditionalX: "conditional-x",
    ParallelEntangler: "parallel-entangler",
    ParallelZ: "parallel-z",
    ElectronReset: "electron-reset",
    MeasureZ: "measure-z",
}


@dataclass
class Circuit:
    """Ordered instruction list; measurements may only appear at the tail."""

    instructions: list

    def __post_init__(self):
        seen_measure = False
        for ins in self.instructions:
            if isinstance(ins, MeasureZ):
                seen_measure = True
            elif seen_measure:
                raise ValueError("MeasureZ must be terminal")

    def __iter__(self):
        return iter(self.instructions)

    def __add__(self, other: "Circuit") -> "Circuit":
        return Circuit(self.instructions + other.instructions)

    def to_json(self) -> str:
        out = []
        for ins in self.instructions:
            d = {"op": _OP_NAMES[type(ins)]}
            if isinstance(ins, ElectronRotation):
                d.update(axis=ins.axis, angle=ins.angle)
            elif isinstance(ins, NuclearLocal):
                d.update(target=ins.target, kind=ins.kind, angle=ins.angle)
            elif isinstance(ins, ConditionalX):
                d.update(target=ins.target, angle=ins.angle)
            elif isinstance(ins, ParallelEntangler):
                d.update(targets=list(ins.targets))
            elif isinstance(ins, ParallelZ):
                d.update(targets=list(ins.targets), angle=ins.angle)
            elif isinstance(ins, MeasureZ):
                d.update(subject=ins.subject)
            out.append(d)
        return json.dumps(out, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        data = json.loads(text)
        instructions = []
        for d in data:
            op = d["op"]
            if op == "electron-rotation":
                instructions.append(ElectronRotation(d["axis"], float(d["angle"])))
            elif op == "nuclear-local":
                instructions.append(NuclearLocal(d["target"], d["kind"], float(d["angle"])))
            elif op == "conditional-x":
                instructions.append(ConditionalX(d["target"], float(d["angle"])))
            elif op == "parallel-entangler":
                instructions.append(ParallelEntangler(tuple(d["targets"])))
            elif op == "parallel-z":
                instructions.append(ParallelZ(tuple(d["targets"]), float(d["angle"])))
            elif op == "electron-reset":
                instructions.append(ElectronReset())
            elif op == "measure-z":
                instructions.append(MeasureZ(d["subject"]))
            else:
                raise ValueError(f"unknown instruction {op!r}")
        return cls(instructions)


# --------------------------------------------------------------------------
# backend


@dataclass
class Backend:
    """Gate realization for a register; caches calibrations and unitaries."""

    cfg: RegisterConfig
    mode: str = "ideal"
    noise: ImperfectPulseParams | None = None
    phase_resolution: float = np.pi / 6  # ParallelZ angular quantum in compiled modes
    _calib: dict = field(default_factory=dict, repr=False)
    _gates: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.mode not in ("ideal", "compiled", "compiled+noise"):
            raise ValueError(f"unknown backend mode {self.mode!r}")
        if self.mode != "compiled+noise":
            self.noise = None

    # -- calibration lookups ------------------------------------------------

    def _calibration(self, key, build):
        if key not in self._calib:
            self._calib[key] = build()
        return self._calib[key]

    def local_x_entry(self, target: str):
        return self._calibration(
            ("x", target), lambda: compiler.calibrate_unconditional_x(self.cfg, target, 2)
        )

    def local_z_entry(self, target: str):
        return self._calibration(("z", target), lambda: compiler.calibrate_z(self.cfg, target))

    def conditional_entry(self, target: str):
        return self._calibration(
            ("cx", target), lambda: compiler.calibrate_conditional_x(self.cfg, target, 2)
        )

    def entangler_entry(self, targets):
        key = ("pe",) + tuple(targets)
        return self._calibration(
            key, lambda: compiler.design_parallel_entangler(self.cfg, list(targets))
        )

    def phase_unit_time(self, targets) -> float:
        """Unit time of the parallel phase gate (one unit == phase_resolution)."""
        key = ("pz",) + tuple(targets)

        def build():
            singles = [
                compiler.calibrate_z(self.cfg, q, self.phase_resolution, n_fixed=1)
                for q in targets
            ]
            return float(np.mean([e.unit_time for e in singles]))

        return self._calibration(key, build)

    def local_unit_angle(self, target: str, kind: str) -> float:
        entry = self.local_x_entry(target) if kind == "x" else self.local_z_entry(target)
        return entry.unit_angle

    def local_repeats(self, target: str, kind: str, angle: float) -> int:
        return compiler._round_half_away((angle % TWO_PI) / self.local_unit_angle(target, kind))

    def snap_phase(self, angle: float) -> float:
        """Nearest multiple of the phase-gate resolution (compiled modes only)."""
        if self.mode == "ideal":
            return angle
        return round(angle / self.phase_resolution) * self.phase_resolution

    # -- unitaries -----------------------------------------------------------

    def _schedule_unitary(self, t: float, repeats: int) -> np.ndarray:
        key = ("sched", round(t, 12), repeats, self.noise)
        if key not in self._gates:
            self._gates[key] = dd_unitary_pulsed(
                self.cfg, build_schedule(t, repeats), self.noise
            )
        return self._gates[key]

    def _conditional_block(self, axes_angles: dict[str, tuple]) -> np.ndarray:
        """sum_j |j><j| (x) prod_sites R_{axis_j}(angle) with identity off-target."""
        n = self.cfg.n_nuclei
        blocks = []
        for j in (0, 1):
            b = np.array([[1.0]], dtype=complex)
            for spec in self.cfg.nuclei:
                if spec.name in axes_angles:
                    axis0, axis1, angle = axes_angles[spec.name]
                    b = np.kron(b, rotation_matrix(axis0 if j == 0 else axis1, angle))
                else:
                    b = np.kron(b, I2)
            blocks.append(b)
        d = 2**n
        u = np.zeros((2 * d, 2 * d), dtype=complex)
        u[:d, :d] = blocks[0]
        u[d:, d:] = blocks[1]
        return u

    def gate_unitary(self, ins: Instruction) -> np.ndarray:
        key = (type(ins).__name__,) + tuple(sorted(ins.__dict__.items()))
        if key in self._gates:
            return self._gates[key]
        u = self._build_unitary(ins)
        self._gates[key] = u
        return u

    def _build_unitary(self, ins: Instruction) -> np.ndarray:
        n = self.cfg.n_nuclei
        if isinstance(ins, ElectronRotation):
            if ins.axis == "z" or self.mode != "compiled+noise":
                axis = {"x": (1.0, 0, 0), "y": (0, 1.0, 0), "z": (0, 0, 1.0)}[ins.axis]
                return tensor([rotation_matrix(axis, ins.angle)] + [I2] * n)
            return electron_pulse(ins.axis, ins.angle, n, self.noise)
        if isinstance(ins, NuclearLocal):
            if self.mode == "ideal":
                axis = (1.0, 0, 0) if ins.kind == "x" else (0, 0, 1.0)
                return embed(rotation_matrix(axis, ins.angle), self.cfg.site(ins.target), 1 + n)
            entry = (
                self.local_x_entry(ins.target) if ins.kind == "x" else self.local_z_entry(ins.target)
            )
            reps = self.local_repeats(ins.target, ins.kind, ins.angle)
            return self._schedule_unitary(entry.unit_time, reps)
        if isinstance(ins, ConditionalX):
            if self.mode == "ideal":
                x = np.array([1.0, 0.0, 0.0])
                return self._conditional_block({ins.target: (x, -x, ins.angle % TWO_PI)})
            entry = self.conditional_entry(ins.target)
            reps = compiler._round_half_away((ins.angle % TWO_PI) / entry.unit_angle)
            return self._schedule_unitary(entry.unit_time, reps)
        if isinstance(ins, ParallelEntangler):
            entry = self.entangler_entry(ins.targets)
            if self.mode == "ideal":
                dec = decompose_unit(self.cfg, entry.unit_time)
                axes_angles = {}
                for q in ins.targets:
                    rot = dec.rotation(q)
                    axes_angles[q] = (rot.axis0, rot.axis1, entry.repeats * rot.angle)
                return self._conditional_block(axes_angles)
            return self._schedule_unitary(entry.unit_time, entry.repeats)
        if isinstance(ins, ParallelZ):
            if self.mode == "ideal":
                z = rotation_matrix((0.0, 0, 1.0), ins.angle)
                ops = [z if s.name in ins.targets else I2 for s in self.cfg.nuclei]
                return tensor([I2] + ops)
            t_unit = self.phase_unit_time(ins.targets)
            reps = round((ins.angle % TWO_PI) / self.phase_resolution)
            return self._schedule_unitary(t_unit, reps)
        raise TypeError(f"no unitary for instruction {ins!r}")


# --------------------------------------------------------------------------
# states and execution


def ground_state(cfg: RegisterConfig) -> DensityState:
    ket = np.zeros(2**cfg.n_sites, dtype=complex)
    ket[0] = 1.0
    return DensityState(np.outer(ket, ket.conj()), (2,) * cfg.n_sites)


def thermal_register_state(cfg: RegisterConfig, polarized=()) -> DensityState:
    """Electron |0>; listed nuclei |0>; all other nuclei maximally mixed."""
    polarized = set(polarized)
    ops = [np.diag([1.0, 0.0]).astype(complex)]
    for spec in cfg.nuclei:
        ops.append(np.diag([1.0, 0.0]).astype(complex) if spec.name in polarized else I2 / 2.0)
    return DensityState(tensor(ops), (2,) * cfg.n_sites)


def electron_reset(state: DensityState) -> DensityState:
    """Optical pump: rho -> |0><0|_e (x) Tr_e(rho); trace preserving, idempotent."""
    d = state.matrix.shape[0] // 2
    tr_e = state.matrix[:d, :d] + state.matrix[d:, d:]
    out = np.zeros_like(state.matrix)
    out[:d, :d] = tr_e
    return DensityState(out, state.dims)


def run_circuit(circuit: Circuit, backend: Backend, initial: DensityState) -> DensityState:
    """Apply the circuit's channels in order and return the final state."""
    state = initial
    for ins in circuit:
        if isinstance(ins, MeasureZ):
            continue  # terminal analysis marker; expectations are read off the state
        if isinstance(ins, ElectronReset):
            state = electron_reset(state)
        else:
            state = state.evolve(backend.gate_unitary(ins))
        if debug_checks_enabled():
            state.validate(herm_tol=1e-9, eig_tol=1e-9)
            if abs(np.trace(state.matrix).real - 1.0) > 1e-10:
                raise AssertionError("channel broke trace preservation")
    return state


def expect_z(state: DensityState, cfg: RegisterConfig, subject: str) -> float:
    site = 0 if subject == "e" else cfg.site(subject)
    return state.expect(embed(SZ, site, cfg.n_sites))


def prob_electron0(state: DensityState) -> float:
    d = state.matrix.shape[0] // 2
    return float(np.trace(state.matrix[:d, :d]).real)


# --------------------------------------------------------------------------
# protocol circuits


def _nuclear_ry(target: str, angle: float) -> list:
    # Ry(a) = Rz(pi/2) Rx(a) Rz(-pi/2), in time order
    return [
        NuclearLocal(target, "z", -np.pi / 2),
        NuclearLocal(target, "x", angle),
        NuclearLocal(target, "z", np.pi / 2),
    ]


def swap_init(nucleus: str) -> Circuit:
    """Polarization transfer |0>_e (x) rho_n -> |0>_n via two dressed CX gates.

    As a channel (including the trailing electron reset) this equals the
    two-CNOT transfer reset o CNOT(e->n) o CNOT(n->e); the dressing uses a
    single fast nuclear phase gate so compiled schedules stay short.
    """
    return Circuit(
        [
            ElectronRotation("y", np.pi / 2),
            ConditionalX(nucleus, np.pi / 2),
            ElectronRotation("x", np.pi / 2),
            NuclearLocal(nucleus, "z", np.pi / 2),
            ConditionalX(nucleus, np.pi / 2),
            ElectronReset(),
        ]
    )


_TOMO_PREP = {
    "z": lambda q: _nuclear_ry(q, np.pi / 2),
    "y": lambda q: [NuclearLocal(q, "z", -np.pi / 2)],
    "x": lambda q: [],
}


def tomography_circuit(nucleus: str, basis: str) -> Circuit:
    """Map the nuclear <basis> expectation onto <Z_e> (ideal-mode contract)."""
    basis = basis.lower()
    if basis not in _TOMO_PREP:
        raise ValueError(f"basis must be one of x, y, z; got {basis!r}")
    ins = list(_TOMO_PREP[basis](nucleus))
    ins += [
        ElectronRotation("y", np.pi / 2),
        ConditionalX(nucleus, np.pi / 2),
        ElectronRotation("x", np.pi / 2),
        MeasureZ("e"),
    ]
    return Circuit(ins)


def ghz_target(n_nuclei: int) -> np.ndarray:
    """GHZ target ket (|0>|1..1> + i^L |1>|0..0>)/sqrt(2), electron first."""
    dim = 2 ** (n_nuclei + 1)
    ket = np.zeros(dim, dtype=complex)
    ket[2**n_nuclei - 1] = 1.0 / np.sqrt(2.0)
    ket[2**n_nuclei] = (1.0j**n_nuclei) / np.sqrt(2.0)
    return ket


def entangler_instructions(mode: str, targets) -> list:
    targets = list(targets)
    if mode == "bipartite":
        if len(targets) != 1:
            raise ValueError("bipartite mode takes exactly one target")
        return [ConditionalX(targets[0], np.pi / 2)]
    if mode == "sequential":
        return [ConditionalX(q, np.pi / 2) for q in targets]
    if mode == "parallel":
        return [ParallelEntangler(tuple(targets))]
    raise ValueError(f"unknown MQC mode {mode!r}")


def _prep_instructions(targets, prep) -> list:
    ins = []
    for q in targets:
        ax, az = prep[q]
        if ax:
            ins.append(NuclearLocal(q, "x", ax))
        if az:
            ins.append(NuclearLocal(q, "z", az))
    return ins


def _undo_instructions(targets, prep) -> list:
    ins = []
    for q in reversed(list(targets)):
        ax, az = prep[q]
        if az:
            ins.append(NuclearLocal(q, "z", -az))
        if ax:
            ins.append(NuclearLocal(q, "x", -ax))
    return ins


@dataclass
class MqcResult:
    mode: str
    targets: tuple[str, ...]
    phi_requested: np.ndarray
    phi: np.ndarray  # actually applied (snapped to the phase resolution)
    p0: np.ndarray

    def header(self) -> list[str]:
        return ["phi_rad", "p0_electron"]

    def rows(self):
        for ph, p in zip(self.phi, self.p0):
            yield [float(ph), float(p)]


def mqc_experiment(
    backend: Backend,
    mode: str,
    targets,
    phi_values,
    prep: dict | None = None,
) -> MqcResult:
    """Multiple-quantum-coherence run: entangle, phase-tag, disentangle, read electron.

    `prep` maps each target to its local (x_angle, z_angle) preparation; the
    default is the analytic X(pi/2) on every target. Phase-gate angles are
    snapped to the backend's resolution in compiled modes.
    """
    targets = list(targets)
    if mode == "bipartite" and len(targets) != 1:
        raise ValueError("bipartite mode takes exactly one target")
    if prep is None:
        prep = {q: (np.pi / 2, 0.0) for q in targets}
    init = Circuit([])
    for q in targets:
        init = init + swap_init(q)
    stage_prep = Circuit(_prep_instructions(targets, prep) + [ElectronRotation("y", np.pi / 2)])
    entangle = Circuit(entangler_instructions(mode, targets))
    stage_undo = Circuit(_undo_instructions(targets, prep) + [ElectronRotation("y", -np.pi / 2)])

    rho_init = run_circuit(init, backend, thermal_register_state(backend.cfg))
    rho_prep = run_circuit(stage_prep, backend, rho_init)
    rho_ent = run_circuit(entangle, backend, rho_prep)

    phi_requested = np.asarray(list(phi_values), dtype=float)
    phi_actual = np.array([backend.snap_phase(p) for p in phi_requested])
    p0 = []
    for ph in phi_actual:
        rho = run_circuit(Circuit([ParallelZ(tuple(targets), float(ph))]), backend, rho_ent)
        rho = run_circuit(entangle, backend, rho)
        rho = run_circuit(stage_undo, backend, rho)
        p0.append(prob_electron0(rho))
    return MqcResult(mode, tuple(targets), phi_requested, phi_actual, np.array(p0))


@dataclass
class RepetitionResult:
    kind: str
    targets: tuple[str, ...]
    n_values: list[int]
    z_values: dict[str, list[float]]  # subject -> per-N_E <Z>
    fidelity_exact: list[float]

    def header(self) -> list[str]:
        return ["N_E", "z_e"] + [f"z_{q}" for q in self.targets] + ["f_exact"]

    def rows(self):
        for i, n in enumerate(self.n_values):
            yield (
                [n, self.z_values["e"][i]]
                + [self.z_values[q][i] for q in self.targets]
                + [self.fidelity_exact[i]]
            )


def repetition_experiment(
    backend: Backend, kind: str, targets, n_values
) -> RepetitionResult:
    """Repeat the entangling gate N_E times from |0..0> and read every qubit's <Z>.

    Ideal mode reads expectations directly on the electron+targets register;
    compiled modes run swap initialization and the Z-tomography sub-circuit
    for nuclear readout.
    """
    targets = list(targets)
    n_values = [int(n) for n in n_values]
    if any(n < 0 for n in n_values):
        raise ValueError("N_E must be >= 0")
    gate_mode = {"cx": "bipartite", "bipartite": "bipartite", "sequential": "sequential", "parallel": "parallel"}[kind]
    entangle = Circuit(entangler_instructions(gate_mode, targets))

    if backend.mode == "ideal":
        sub_cfg = backend.cfg.restrict(targets)
        sub_backend = Backend(sub_cfg, "ideal")
        if gate_mode == "parallel":
            # the designed gate is fixed by the full register's geometry
            sub_backend._calib[("pe",) + tuple(targets)] = backend.entangler_entry(tuple(targets))
        rho = ground_state(sub_cfg)
        u = np.eye(2**sub_cfg.n_sites, dtype=complex)
        for ins in entangle:
            u = sub_backend.gate_unitary(ins) @ u
        prep = sub_backend.gate_unitary(ElectronRotation("y", np.pi / 2))
        z_values = {s: [] for s in ["e"] + targets}
        f_exact = []
        for n in n_values:
            un = prep.conj().T @ np.linalg.matrix_power(u, n) @ prep
            state = rho.evolve(un)
            z_values["e"].append(expect_z(state, sub_cfg, "e"))
            for q in targets:
                z_values[q].append(expect_z(state, sub_cfg, q))
            f_exact.append(float(state.matrix[0, 0].real))
        return RepetitionResult(kind, tuple(targets), n_values, z_values, f_exact)

    init = Circuit([])
    for q in targets:
        init = init + swap_init(q)
    init = init + Circuit([ElectronRotation("y", np.pi / 2)])
    rho0 = run_circuit(init, backend, thermal_register_state(backend.cfg))
    undo = Circuit([ElectronRotation("y", -np.pi / 2)])
    z_values = {s: [] for s in ["e"] + targets}
    f_exact = []
    state = rho0
    by_n = {}
    current = 0
    for n in sorted(set(n_values)):
        for _ in range(n - current):
            state = run_circuit(entangle, backend, state)
        current = n
        by_n[n] = state
    sites = [0] + [backend.cfg.site(q) for q in targets]
    for n in n_values:
        state = run_circuit(undo, backend, by_n[n])
        z_values["e"].append(expect_z(state, backend.cfg, "e"))
        for q in targets:
            readout = Circuit([ElectronReset()]) + tomography_circuit(q, "z")
            out = run_circuit(readout, backend, state)
            z_values[q].append(expect_z(out, backend.cfg, "e"))
        reduced = partial_trace(state, sites)
        f_exact.append(float(reduced.matrix[0, 0].real))
    return RepetitionResult(kind, tuple(targets), n_values, z_values, f_exact)


def ideal_repetition_states(backend: Backend, targets, n_values) -> list[DensityState]:
    """Ideal per-N_E density matrices of the repeated parallel gate (e+targets).

    Same circuit as the ideal-mode repetition run: the electron superposition
    prep, N_E applications of the designed gate, then the prep undone.
    """
    targets = list(targets)
    sub_cfg = backend.cfg.restrict(targets)
    sub_backend = Backend(sub_cfg, "ideal")
    sub_backend._calib[("pe",) + tuple(targets)] = backend.entangler_entry(tuple(targets))
    u = sub_backend.gate_unitary(ParallelEntangler(tuple(targets)))
    prep = sub_backend.gate_unitary(ElectronRotation("y", np.pi / 2))
    rho = ground_state(sub_cfg)
    return [
        rho.evolve(prep.conj().T @ np.linalg.matrix_power(u, int(n)) @ prep) for n in n_values
    ]


def select_revival_repeats(backend: Backend, targets, n_max: int = 40, count: int = 4):
    """N_E values (1..n_max) whose ideal repeated-gate state best overlaps |0..0>."""
    states = ideal_repetition_states(backend, targets, range(1, n_max + 1))
    fid = np.array([s.matrix[0, 0].real for s in states])
    order = np.argsort(-fid, kind="stable")
    chosen = sorted(int(i) + 1 for i in order[:count])
    return chosen, fid


@dataclass
class SpectroscopyResult:
    t_values: np.ndarray
    closed_form: np.ndarray
    simulated: np.ndarray
    repeats: int

    def header(self) -> list[str]:
        return ["t_us", "p_closed", "p_simulated"]

    def rows(self):
        for t, c, s in zip(self.t_values, self.closed_form, self.simulated):
            yield [float(t), float(c), float(s)]


def dd_spectroscopy(
    cfg: RegisterConfig, t_values, repeats: int, include=None, threads: int = 1
) -> SpectroscopyResult:
    """DD spectroscopy on thermal nuclei: electron-X survival vs unit time.

    Both routes are returned: the closed form
    P = 1/2 (1 + 2^-L Re prod_l tr(R_n0 R_n1^dag)) and a full density-matrix
    simulation of the pulsed schedule.
    """
    sub = cfg.restrict(include) if include is not None else cfg
    L = sub.n_nuclei
    x_plus = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)
    rho_e = np.outer(x_plus, x_plus.conj())
    rho0 = DensityState(tensor([rho_e] + [I2 / 2.0] * L), (2,) * (L + 1))
    proj = tensor([rho_e] + [I2] * L)

    def point(t):
        t = float(t)
        dec = decompose_unit(sub, t)
        prod = 1.0 + 0.0j
        for rot in dec.rotations:
            r0 = rotation_matrix(rot.axis0, repeats * rot.angle)
            r1 = rotation_matrix(rot.axis1, repeats * rot.angle)
            prod *= np.trace(r0 @ r1.conj().T)
        closed = 0.5 * (1.0 + prod.real / 2.0**L)
        u = dd_unitary_pulsed(sub, build_schedule(t, repeats))
        sim = float(np.trace(proj @ (u @ rho0.matrix @ u.conj().T)).real)
        return closed, sim

    from ._parallel import parallel_map

    t_values = np.asarray(list(t_values), dtype=float)
    results = parallel_map(point, t_values, threads)
    closed = np.array([r[0] for r in results])
    sim = np.array([r[1] for r in results])
    return SpectroscopyResult(t_values, closed, sim, repeats)
