"""Value types and small dense linear algebra for qubit Pauli maps.

A Pauli map is fixed by three real numbers ``(lambda1, lambda2, lambda3)``
scaling the Bloch components of the input state. Everything here works
with dense complex matrices of dimension at most a few hundred, so plain
numpy is the right tool.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, NamedTuple, Sequence, Union

import numpy as np

__all__ = [
    "TOL",
    "SIM_TOL",
    "IDENTITY2",
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "PAULIS",
    "DimensionError",
    "NotHermitianError",
    "NotPauliDiagonalError",
    "PauliTriple",
    "QVector",
    "KappaVector",
    "Trajectory",
    "axis_index",
    "is_positive",
    "is_cp",
    "q_from_lambda",
    "lambda_from_q",
    "apply_pauli_channel",
    "tomography",
    "PROBE_STATES",
    "triple_from_probe_images",
    "q_matrix_from_lambdas",
    "partial_trace_env",
    "hermitian_exp",
    "validate_density_matrix",
    "pure_state",
    "bloch_state",
]

TOL = 1e-12
SIM_TOL = 1e-10

IDENTITY2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

# Hadamard-type matrix mapping (1, l1, l2, l3) to 4 q.
_Q_MATRIX = np.array(
    [
        [1, 1, 1, 1],
        [1, 1, -1, -1],
        [1, -1, 1, -1],
        [1, -1, -1, 1],
    ],
    dtype=float,
)


class DimensionError(ValueError):
    pass


class NotHermitianError(ValueError):
    pass


class NotPauliDiagonalError(ValueError):
    """Raised by :func:`tomography` when the channel mixes Pauli components."""

    def __init__(self, message: str, max_offdiagonal: float):
        super().__init__(message)
        self.max_offdiagonal = max_offdiagonal


class PauliTriple(NamedTuple):
    lambda1: float
    lambda2: float
    lambda3: float

    @classmethod
    def identity(cls) -> "PauliTriple":
        return cls(1.0, 1.0, 1.0)

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


class QVector(NamedTuple):
    """Weights of I, sigma_x, sigma_y, sigma_z in the Pauli-channel mixture."""

    q0: float
    q1: float
    q2: float
    q3: float


@dataclass(frozen=True)
class KappaVector:
    """Logarithmic derivative ``d/dt ln|lambda_i|`` of a trajectory.

    ``one_sided`` marks first-order endpoint estimates from sampled data.
    """

    kappa1: float
    kappa2: float
    kappa3: float
    one_sided: bool = False

    def __iter__(self) -> Iterator[float]:
        return iter((self.kappa1, self.kappa2, self.kappa3))

    def as_array(self) -> np.ndarray:
        return np.array([self.kappa1, self.kappa2, self.kappa3], dtype=float)


TripleLike = Union[PauliTriple, Sequence[float], np.ndarray]


@dataclass(frozen=True)
class Trajectory:
    """Samples of a Pauli dynamical map on a strictly increasing time grid.

    ``lambdas`` has shape ``(len(times), 3)``.
    """

    times: np.ndarray
    lambdas: np.ndarray
    name: str = ""

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        lambdas = np.asarray(self.lambdas, dtype=float)
        if times.ndim != 1:
            raise DimensionError("times must be one-dimensional")
        if lambdas.shape != (times.size, 3):
            raise DimensionError(
                f"lambdas must have shape ({times.size}, 3), got {lambdas.shape}"
            )
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("times must be strictly increasing")
        times.setflags(write=False)
        lambdas.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "lambdas", lambdas)

    def __len__(self) -> int:
        return self.times.size

    def triple(self, index: int) -> PauliTriple:
        return PauliTriple(*map(float, self.lambdas[index]))

    def triples(self) -> list[PauliTriple]:
        return [PauliTriple(*map(float, row)) for row in self.lambdas]

    @classmethod
    def from_function(cls, fn: Callable, times, name: str = "") -> "Trajectory":
        times = np.asarray(times, dtype=float)
        return cls(times, np.array([np.asarray(fn(t), dtype=float) for t in times]), name)


def axis_index(axis: Union[int, str]) -> int:
    """Map ``1|2|3`` or ``'x'|'y'|'z'`` to a zero-based index."""
    if isinstance(axis, str):
        try:
            return "xyz".index(axis.lower())
        except ValueError:
            raise ValueError(f"unknown axis {axis!r}") from None
    if axis in (1, 2, 3):
        return int(axis) - 1
    raise ValueError(f"unknown axis {axis!r}; use 1, 2, 3 or 'x', 'y', 'z'")


def is_positive(t: TripleLike, tol: float = TOL) -> bool:
    lam = np.asarray(t, dtype=float)
    return bool(np.max(np.abs(lam)) <= 1 + tol)


def is_cp(t: TripleLike, tol: float = TOL) -> bool:
    l1, l2, l3 = np.asarray(t, dtype=float)
    return bool(1 + l3 + tol >= abs(l1 + l2) and 1 - l3 + tol >= abs(l1 - l2))


def q_from_lambda(t: TripleLike) -> QVector:
    vec = np.concatenate(([1.0], np.asarray(t, dtype=float)))
    return QVector(*map(float, _Q_MATRIX @ vec / 4))


def lambda_from_q(q: Union[QVector, Sequence[float]]) -> PauliTriple:
    vec = _Q_MATRIX @ np.asarray(q, dtype=float)
    return PauliTriple(*map(float, vec[1:]))


def q_matrix_from_lambdas(lambdas: np.ndarray) -> np.ndarray:
    """Vectorised :func:`q_from_lambda` over rows of an ``(n, 3)`` array."""
    lambdas = np.atleast_2d(np.asarray(lambdas, dtype=float))
    ones = np.ones((lambdas.shape[0], 1))
    return np.hstack([ones, lambdas]) @ _Q_MATRIX.T / 4


def validate_density_matrix(rho: np.ndarray, dim: int | None = None, tol: float = TOL) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"density matrix must be square, got {rho.shape}")
    if dim is not None and rho.shape[0] != dim:
        raise DimensionError(f"expected dimension {dim}, got {rho.shape[0]}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise NotHermitianError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValueError("density matrix does not have unit trace")
    if np.linalg.eigvalsh(rho).min() < -1e-10:
        raise ValueError("density matrix has negative eigenvalues")
    return rho


def pure_state(ket: Sequence[complex]) -> np.ndarray:
    ket = np.asarray(ket, dtype=complex)
    ket = ket / np.linalg.norm(ket)
    return np.outer(ket, ket.conj())


def bloch_state(r: Sequence[float]) -> np.ndarray:
    """Qubit density matrix with Bloch vector ``r``."""
    rx, ry, rz = r
    return 0.5 * (IDENTITY2 + rx * SIGMA_X + ry * SIGMA_Y + rz * SIGMA_Z)


def apply_pauli_channel(t: TripleLike, rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise DimensionError(f"Pauli channel acts on 2x2 matrices, got {rho.shape}")
    out = np.trace(rho) * IDENTITY2
    for lam, sigma in zip(np.asarray(t, dtype=float), PAULIS):
        out = out + lam * np.trace(sigma @ rho) * sigma
    return 0.5 * out


PROBE_STATES = (IDENTITY2 / 2,) + tuple(
    (IDENTITY2 + sign * s) / 2 for s in PAULIS for sign in (1, -1)
)


def triple_from_probe_images(images: Sequence[np.ndarray], tol: float = SIM_TOL) -> PauliTriple:
    """Pauli triple from a channel's images of :data:`PROBE_STATES` (same order).

    Images of ``sigma_j`` follow by linearity. Any off-diagonal
    Pauli-transfer element (including non-unitality and trace leakage) above
    ``tol`` is an error.
    """
    images = [np.asarray(m, dtype=complex) for m in images]
    if len(images) != 7 or any(m.shape != (2, 2) for m in images):
        raise DimensionError("expected seven 2x2 probe images")
    columns = [2 * images[0]] + [images[1 + 2 * j] - images[2 + 2 * j] for j in range(3)]
    basis = (IDENTITY2,) + PAULIS
    ptm = np.array([[0.5 * np.trace(b @ col).real for col in columns] for b in basis])
    off = ptm - np.diag(np.diag(ptm))
    worst = float(np.max(np.abs(off)))
    if worst > tol or abs(ptm[0, 0] - 1) > tol:
        raise NotPauliDiagonalError(
            f"channel is not Pauli diagonal (largest off-diagonal transfer element {worst:.3e})",
            worst,
        )
    return PauliTriple(*map(float, np.diag(ptm)[1:]))


def tomography(channel: Callable[[np.ndarray], np.ndarray], tol: float = SIM_TOL) -> PauliTriple:
    """Read the Pauli triple of a Pauli-diagonal qubit channel.

    The channel is only probed on density matrices: ``I/2`` and the six
    eigenprojectors ``(I +- sigma_j)/2``.
    """
    return triple_from_probe_images([channel(rho) for rho in PROBE_STATES], tol)


def partial_trace_env(joint: np.ndarray, d: int) -> np.ndarray:
    """Trace out the environment factor of a ``system (2) x environment (d)`` operator."""
    joint = np.asarray(joint)
    if joint.shape != (2 * d, 2 * d):
        raise DimensionError(f"expected a {2 * d}x{2 * d} matrix, got {joint.shape}")
    return np.einsum("ajbj->ab", joint.reshape(2, d, 2, d))


def hermitian_exp(H: np.ndarray, t: float, tol: float = TOL) -> np.ndarray:
    """``exp(-i H t)`` through the eigendecomposition of Hermitian ``H``."""
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DimensionError(f"H must be square, got {H.shape}")
    if np.max(np.abs(H - H.conj().T), initial=0.0) > tol:
        raise NotHermitianError("H is not Hermitian")
    w, v = np.linalg.eigh(H)
    return (v * np.exp(-1j * w * t)) @ v.conj().T
