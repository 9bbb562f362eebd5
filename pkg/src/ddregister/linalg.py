"""Dense complex linear algebra and quantum-state primitives.

Everything here works on plain ``numpy`` arrays of complex amplitudes.
Register sizes in this project are at most five qubits (32x32), so all
operators are dense and eagerly materialized.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

I2 = np.eye(2, dtype=complex)
SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SY = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULIS = (SX, SY, SZ)

KET0 = np.array([1.0, 0.0], dtype=complex)
KET1 = np.array([0.0, 1.0], dtype=complex)

# Hermiticity/positivity checks after each channel application are gated on
# this flag (expensive in inner loops); see `set_debug_checks`.
_DEBUG_CHECKS = False


def set_debug_checks(enabled: bool) -> None:
    """Enable per-channel Hermiticity/positivity checks (tolerance 1e-9)."""
    global _DEBUG_CHECKS
    _DEBUG_CHECKS = bool(enabled)


def debug_checks_enabled() -> bool:
    return _DEBUG_CHECKS


def rotation_matrix(axis, angle: float) -> np.ndarray:
    """Spin-1/2 rotation operator exp(-i*angle*(axis . sigma)/2).

    Parameters
    ----------
    axis : length-3 unit vector. A non-unit axis (|norm - 1| > 1e-12) is a
        caller bug and raises ``ValueError``.
    angle : rotation angle in radians.
    """
    axis = np.asarray(axis, dtype=float)
    if axis.shape != (3,):
        raise ValueError(f"axis must be a 3-vector, got shape {axis.shape}")
    norm = float(np.linalg.norm(axis))
    if abs(norm - 1.0) > 1e-12:
        raise ValueError(f"axis must be normalized, |axis| = {norm!r}")
    ns = axis[0] * SX + axis[1] * SY + axis[2] * SZ
    return np.cos(angle / 2.0) * I2 - 1.0j * np.sin(angle / 2.0) * ns


@dataclass(frozen=True)
class RotationOp:
    """A rotation axis (unit 3-vector) and angle in radians."""

    axis: tuple[float, float, float]
    angle: float

    def __post_init__(self):
        norm = float(np.linalg.norm(self.axis))
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"axis must be normalized, |axis| = {norm!r}")

    @property
    def matrix(self) -> np.ndarray:
        return rotation_matrix(self.axis, self.angle)


def tensor(ops) -> np.ndarray:
    """Kronecker product of square operators in register order."""
    out = np.array([[1.0]], dtype=complex)
    for op in ops:
        op = np.asarray(op, dtype=complex)
        if op.ndim != 2 or op.shape[0] != op.shape[1]:
            raise ValueError("tensor factors must be square matrices")
        out = np.kron(out, op)
    return out


def embed(op: np.ndarray, position: int, n_sites: int) -> np.ndarray:
    """Single-qubit `op` acting on `position` of an `n_sites` qubit register."""
    return tensor([op if i == position else I2 for i in range(n_sites)])


@dataclass
class DensityState:
    """Density matrix over an ordered register (electron first, then nuclei).

    The matrix is expected to stay Hermitian, unit-trace and positive to the
    module tolerances; `validate` checks this explicitly.
    """

    matrix: np.ndarray
    dims: tuple[int, ...] = field(default=None)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        d = self.matrix.shape[0]
        if self.matrix.shape != (d, d):
            raise ValueError("density matrix must be square")
        if self.dims is None:
            n = int(round(np.log2(d)))
            if 2**n != d:
                raise ValueError("dimension is not a power of two")
            self.dims = (2,) * n
        else:
            self.dims = tuple(int(x) for x in self.dims)
            if int(np.prod(self.dims)) != d:
                raise ValueError("dims do not match matrix dimension")

    @property
    def n_sites(self) -> int:
        return len(self.dims)

    def validate(self, herm_tol: float = 1e-10, eig_tol: float = 1e-9) -> None:
        m = self.matrix
        if np.max(np.abs(m - m.conj().T)) > herm_tol:
            raise ValueError("state is not Hermitian")
        if abs(np.trace(m).real - 1.0) > herm_tol:
            raise ValueError(f"state trace is {np.trace(m).real!r}, not 1")
        evals = np.linalg.eigvalsh(m)
        if evals.min() < -eig_tol:
            raise ValueError(f"state has negative eigenvalue {evals.min()!r}")

    def evolve(self, u: np.ndarray) -> "DensityState":
        return DensityState(u @ self.matrix @ u.conj().T, self.dims)

    def expect(self, op: np.ndarray) -> float:
        return float(np.trace(op @ self.matrix).real)

    def copy(self) -> "DensityState":
        return DensityState(self.matrix.copy(), self.dims)


def pure_state(ket: np.ndarray, dims=None) -> DensityState:
    ket = np.asarray(ket, dtype=complex)
    ket = ket / np.linalg.norm(ket)
    return DensityState(np.outer(ket, ket.conj()), dims)


def basis_density(n_sites: int, index: int = 0) -> DensityState:
    ket = np.zeros(2**n_sites, dtype=complex)
    ket[index] = 1.0
    return pure_state(ket, (2,) * n_sites)


def partial_trace(state: DensityState, keep) -> DensityState:
    """Reduced state over the subsystems listed in `keep` (register order)."""
    keep = sorted(set(int(k) for k in keep))
    n = state.n_sites
    if not keep:
        raise ValueError("keep must be a nonempty subset of subsystem indices")
    if keep[0] < 0 or keep[-1] >= n:
        raise ValueError(f"keep indices out of range for {n} subsystems")
    dims = state.dims
    t = state.matrix.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # trace highest axis pairs first so remaining axis numbers stay valid
    for i in sorted(traced, reverse=True):
        t = np.trace(t, axis1=i, axis2=i + (t.ndim // 2))
    d_keep = int(np.prod([dims[i] for i in keep]))
    return DensityState(t.reshape(d_keep, d_keep), tuple(dims[i] for i in keep))


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    evals, vecs = np.linalg.eigh(m)
    # numerical junk (|lambda| ~ eps) must not survive the sqrt
    cutoff = max(float(evals.max()), 1.0) * 1e-14
    evals = np.where(evals > cutoff, evals, 0.0)
    return (vecs * np.sqrt(evals)) @ vecs.conj().T


def state_fidelity_uhlmann(a: DensityState, b: DensityState) -> float:
    """Uhlmann fidelity F = (tr sqrt(sqrt(a) b sqrt(a)))^2, in [0, 1].

    Evaluated as the squared trace norm of sqrt(a) sqrt(b) (singular values),
    which is numerically stable for rank-deficient states.
    """
    if a.dims != b.dims:
        raise ValueError(f"dimension mismatch: {a.dims} vs {b.dims}")
    s = np.linalg.svd(_psd_sqrt(a.matrix) @ _psd_sqrt(b.matrix), compute_uv=False)
    f = float(np.sum(s)) ** 2
    return float(min(max(f, 0.0), 1.0))


def _check_unitary(u: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    d = u.shape[0]
    if u.shape != (d, d):
        raise ValueError("operator must be square")
    if np.max(np.abs(u.conj().T @ u - np.eye(d))) > tol:
        raise ValueError("operator is not unitary")
    return u


def process_fidelity(u: np.ndarray, v: np.ndarray) -> float:
    """Trace-overlap process fidelity |tr(u^dag v)|^2 / d^2 for unitaries.

    Invariant under a global phase on either argument.
    """
    u = _check_unitary(u)
    v = _check_unitary(v)
    if u.shape != v.shape:
        raise ValueError("unitaries must have equal dimension")
    d = u.shape[0]
    return float(min(abs(np.trace(u.conj().T @ v) / d) ** 2, 1.0))


def process_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 - process_fidelity; zero iff the unitaries agree up to global phase."""
    return 1.0 - process_fidelity(u, v)
