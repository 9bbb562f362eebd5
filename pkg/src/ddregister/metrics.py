"""Bipartite and multipartite entanglement metrics over DD parameters."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._parallel import parallel_map
from .ddengine import decompose_unit
from .register import RegisterConfig

TWO_PI = 2.0 * np.pi


def makhlin_g1(dot: float, angle: float) -> float:
    """First Makhlin invariant of a time-symmetric DD block.

    G1 = (cos^2(angle/2) + dot*sin^2(angle/2))^2 with `angle` the total
    rotation angle N*phi; minimal (0) at maximal entangling power. The angle
    is reduced mod 2pi first to avoid precision loss at large N.
    """
    if not -1.0 <= dot <= 1.0 + 1e-12:
        raise ValueError(f"dot must lie in [-1, 1], got {dot!r}")
    a = angle % TWO_PI
    c, s = np.cos(a / 2.0), np.sin(a / 2.0)
    return float((c * c + dot * s * s) ** 2)


def _g1_per_target(cfg: RegisterConfig, targets, t: float, repeats: int) -> dict[str, float]:
    dec = decompose_unit(cfg, t)
    out = {}
    for name in targets:
        rot = dec.rotation(name)
        out[name] = makhlin_g1(rot.dot, repeats * rot.angle)
    return out


def entangling_power(
    cfg: RegisterConfig, targets, t: float, repeats: int, normalized: bool = True
) -> float:
    """M-qubit entangling power of the DD sequence over the target nuclei.

    Normalized form (default) is prod_l (1 - G1_l); the unnormalized form
    carries the (d/(d+1))^M prefactor with d = 2 and M = len(targets) + 1.
    """
    targets = list(targets)
    if not targets:
        raise ValueError("target set must be nonempty")
    g1s = _g1_per_target(cfg, targets, t, repeats)
    value = float(np.prod([1.0 - g for g in g1s.values()]))
    if not normalized:
        value *= (2.0 / 3.0) ** (len(targets) + 1)
    return value


def strongest_spectator(cfg: RegisterConfig, targets) -> str:
    """First register-order nucleus not in targets (nuclei are ordered strongest-first)."""
    targets = set(targets)
    for spec in cfg.nuclei:
        if spec.name not in targets:
            return spec.name
    raise ValueError("no non-target nuclei left in the register")


def residual_entangling_power(cfg: RegisterConfig, targets, t: float, repeats: int) -> float:
    """Entangling power with the strongest non-target nucleus appended."""
    extra = strongest_spectator(cfg, targets)
    return entangling_power(cfg, list(targets) + [extra], t, repeats)


@dataclass(frozen=True)
class MetricPoint:
    t: float
    repeats: int
    g1: dict[str, float]
    epower: float
    residual_epower: float | None


@dataclass
class MetricGrid:
    """Full (t, N) metric grid plus the argmax point (ties -> smallest N*t)."""

    targets: tuple[str, ...]
    points: list[MetricPoint]
    best: MetricPoint
    no_maximal_entangler: bool

    def header(self) -> list[str]:
        cols = ["t_us", "N"] + [f"g1_{n}" for n in self.targets] + ["epower"]
        cols.append("residual_epower")
        return cols

    def rows(self):
        for p in self.points:
            res = p.residual_epower if p.residual_epower is not None else float("nan")
            yield [p.t, p.repeats] + [p.g1[n] for n in self.targets] + [p.epower, res]


def metric_scan(
    cfg: RegisterConfig, targets, t_values, n_values, threads: int = 1
) -> MetricGrid:
    """Evaluate G1/epower over a (t, N) grid and locate the maximum entangling power.

    The scan is flagged `no_maximal_entangler` when no grid time has every
    target's rotation-axis dot negative (Eq.-level lower bound G1 > 0).
    """
    targets = tuple(targets)
    if not targets:
        raise ValueError("target set must be nonempty")
    t_values = [float(t) for t in t_values]
    n_values = [int(n) for n in n_values]
    if not t_values or not n_values:
        raise ValueError("scan ranges must be nonempty")
    has_spectator = len(targets) < cfg.n_nuclei
    spectator = strongest_spectator(cfg, targets) if has_spectator else None

    def column(t):
        dec = decompose_unit(cfg, t)
        rots = {name: dec.rotation(name) for name in targets}
        spec_rot = dec.rotation(spectator) if has_spectator else None
        pts = []
        for n in n_values:
            g1 = {name: makhlin_g1(r.dot, n * r.angle) for name, r in rots.items()}
            ep = float(np.prod([1.0 - g for g in g1.values()]))
            res = None
            if spec_rot is not None:
                res = ep * (1.0 - makhlin_g1(spec_rot.dot, n * spec_rot.angle))
            pts.append(MetricPoint(t, n, g1, ep, res))
        all_neg = all(r.dot < 0 for r in rots.values())
        return pts, all_neg

    results = parallel_map(column, t_values, threads)
    points = [p for col, _ in results for p in col]
    any_all_negative = any(flag for _, flag in results)
    best = max(points, key=lambda p: (p.epower, -(p.repeats * p.t)))
    return MetricGrid(targets, points, best, not any_all_negative)
