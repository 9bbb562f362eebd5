"""Physical model of the register: configuration, conditional frames, free evolution.

Unit conventions (converted in exactly one place, here):
hyperfine couplings and the gyromagnetic ratio are entered as ordinary
frequencies (kHz, kHz/G); everything downstream uses angular frequencies in
rad/us and times in us.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from .linalg import rotation_matrix

TWO_PI = 2.0 * np.pi
KHZ_TO_RAD_PER_US = TWO_PI * 1e-3

DEFAULT_GAMMA_C13 = 1.07084  # kHz/G
DEFAULT_FIELD = 338.0  # gauss
MEASURED_FIELD = 338.19  # gauss, available as a preset


@dataclass(frozen=True)
class NuclearSpec:
    """One nuclear qubit: name plus parallel/perpendicular hyperfine couplings (kHz)."""

    name: str
    a_par_khz: float
    a_perp_khz: float

    def __post_init__(self):
        if self.a_perp_khz < 0:
            raise ValueError(f"{self.name}: a_perp must be >= 0")


@dataclass(frozen=True)
class RegisterConfig:
    """Electron + nuclei register in a static field along z.

    Nuclei are ordered strongest-coupled first; that order is the register
    order everywhere (electron is subsystem 0, nucleus i is subsystem i+1).
    """

    field_gauss: float = DEFAULT_FIELD
    gamma_khz_per_gauss: float = DEFAULT_GAMMA_C13
    spin_projections: tuple[float, float] = (0.0, -1.0)
    nuclei: tuple[NuclearSpec, ...] = ()

    def __post_init__(self):
        if self.field_gauss <= 0:
            raise ValueError("field must be positive")
        if self.gamma_khz_per_gauss <= 0:
            raise ValueError("gamma must be positive")
        s0, s1 = self.spin_projections
        if s0 == s1:
            raise ValueError("electron spin projections must differ")
        names = [n.name for n in self.nuclei]
        if len(set(names)) != len(names):
            raise ValueError("nucleus names must be unique")
        object.__setattr__(self, "nuclei", tuple(self.nuclei))

    @property
    def omega_larmor(self) -> float:
        """Nuclear Larmor angular frequency, rad/us."""
        return self.gamma_khz_per_gauss * self.field_gauss * KHZ_TO_RAD_PER_US

    @property
    def n_nuclei(self) -> int:
        return len(self.nuclei)

    @property
    def n_sites(self) -> int:
        return 1 + len(self.nuclei)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n.name for n in self.nuclei)

    def index(self, name: str) -> int:
        """Index of a nucleus in the nuclei list (not the register position)."""
        for i, n in enumerate(self.nuclei):
            if n.name == name:
                return i
        raise KeyError(f"no nucleus named {name!r} in register")

    def site(self, name: str) -> int:
        """Register position (electron is 0, first nucleus is 1)."""
        return 1 + self.index(name)

    def spec(self, name: str) -> NuclearSpec:
        return self.nuclei[self.index(name)]

    def restrict(self, names) -> "RegisterConfig":
        """Config containing only the listed nuclei, in register order."""
        keep = [n for n in self.nuclei if n.name in set(names)]
        if len(keep) != len(set(names)):
            missing = set(names) - {n.name for n in keep}
            raise KeyError(f"unknown nuclei: {sorted(missing)}")
        return RegisterConfig(
            self.field_gauss, self.gamma_khz_per_gauss, self.spin_projections, tuple(keep)
        )

    def with_field(self, field_gauss: float) -> "RegisterConfig":
        return RegisterConfig(
            field_gauss, self.gamma_khz_per_gauss, self.spin_projections, self.nuclei
        )


@dataclass(frozen=True)
class ConditionalFrame:
    """Per-nucleus free-precession frames conditioned on the electron branch.

    omega[j] is the precession rate (rad/us) and axis[j] the unit precession
    axis (y-component zero) for electron branch j in {0, 1}.
    """

    name: str
    omega: tuple[float, float]
    axis: tuple[np.ndarray, np.ndarray]


@lru_cache(maxsize=8192)
def build_frames(cfg: RegisterConfig) -> tuple[ConditionalFrame, ...]:
    """Conditional frames (p_j, omega_j) for every nucleus in the register.

    omega_j = |(s_j*A_perp, 0, omega_Lar + s_j*A_par)| with the axis the
    normalized vector; for s_j = 0 this is bare Larmor precession about z.
    """
    w_lar = cfg.omega_larmor
    frames = []
    for spec in cfg.nuclei:
        a_par = spec.a_par_khz * KHZ_TO_RAD_PER_US
        a_perp = spec.a_perp_khz * KHZ_TO_RAD_PER_US
        omegas = []
        axes = []
        for s in cfg.spin_projections:
            vec = np.array([s * a_perp, 0.0, w_lar + s * a_par])
            w = float(np.linalg.norm(vec))
            axes.append(vec / w if w > 0 else np.array([0.0, 0.0, 1.0]))
            omegas.append(w)
        frames.append(ConditionalFrame(spec.name, (omegas[0], omegas[1]), (axes[0], axes[1])))
    return tuple(frames)


def free_evolution(cfg: RegisterConfig, t: float) -> np.ndarray:
    """Free-evolution unitary over the full register for duration t (us).

    Electron-block-diagonal: sum_j |j><j| (x) prod_l R_{p_j^(l)}(t * omega_j^(l)).
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    frames = build_frames(cfg)
    blocks = []
    for j in (0, 1):
        b = np.array([[1.0]], dtype=complex)
        for fr in frames:
            b = np.kron(b, rotation_matrix(fr.axis[j], fr.omega[j] * t))
        blocks.append(b)
    d = blocks[0].shape[0]
    u = np.zeros((2 * d, 2 * d), dtype=complex)
    u[:d, :d] = blocks[0]
    u[d:, d:] = blocks[1]
    return u


def to_dict(cfg: RegisterConfig) -> dict:
    return {
        "field_gauss": cfg.field_gauss,
        "gamma_khz_per_gauss": cfg.gamma_khz_per_gauss,
        "spin_projections": list(cfg.spin_projections),
        "nuclei": [
            {"name": n.name, "a_par_khz": n.a_par_khz, "a_perp_khz": n.a_perp_khz}
            for n in cfg.nuclei
        ],
    }


def from_dict(data: dict) -> RegisterConfig:
    return RegisterConfig(
        field_gauss=float(data["field_gauss"]),
        gamma_khz_per_gauss=float(data.get("gamma_khz_per_gauss", DEFAULT_GAMMA_C13)),
        spin_projections=tuple(data.get("spin_projections", (0.0, -1.0))),
        nuclei=tuple(
            NuclearSpec(d["name"], float(d["a_par_khz"]), float(d["a_perp_khz"]))
            for d in data["nuclei"]
        ),
    )


def load_register(path) -> RegisterConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return from_dict(json.load(fh))


def save_register(cfg: RegisterConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")


def paper_register() -> RegisterConfig:
    """The shipped four-qubit register preset (SM hyperfine table, 338 G)."""
    ref = resources.files("ddregister").joinpath("registers/paper.json")
    return from_dict(json.loads(ref.read_text(encoding="utf-8")))
