"""Exact collision-model simulation for Pauli dynamical maps.

The system qubit meets a fresh environment particle at every step. For the
environments handled here the induced map stays Pauli diagonal, so each run
reduces to bookkeeping on three numbers per step:

* factorized (i.i.d.) and interleaved environments compose elementary
  triples componentwise;
* block-diagonal (direct-sum) correlated environments mix the block runs;
* branch-correlated environments of computational-basis strings drive the
  system by one deterministic unitary per branch.

Brute-force joint-state counterparts live in :mod:`paulidiv.dilation`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .core import (
    IDENTITY2,
    PAULIS,
    SIM_TOL,
    PauliTriple,
    Trajectory,
    axis_index,
    hermitian_exp,
    partial_trace_env,
    tomography,
)

__all__ = [
    "HamiltonianXY",
    "ControlledAxis",
    "Idle",
    "FactorizedIID",
    "Interleaved",
    "BlockMixture",
    "BranchCorrelated",
    "NotControlledError",
    "elementary_channel",
    "elementary_triple",
    "elementary_map_xy",
    "run_factorized",
    "run_interleaved",
    "run_block_mixture",
    "run_branch_correlated",
    "simulate",
    "stroboscopic_coupling",
    "ghz_branches",
    "branch_dephasing",
]

Axis = Union[int, str]
_PAULI_STACK = np.stack(PAULIS)


class NotControlledError(TypeError):
    """A branch-correlated run was given a collision that mixes environment basis states."""


@dataclass(frozen=True)
class HamiltonianXY:
    """Pair interaction ``H = (g1 s_i(x)s_i + g2 s_j(x)s_j) / 2`` for a time ``tau``.

    ``axes=('x', 'y')`` is the XY coupling; other axis pairs give the same
    structure rotated (e.g. ``g2 = 0`` and ``axes=('z', 'x')`` is a pure
    ``z`` dephasing collision).
    """

    g1: float
    g2: float
    tau: float
    axes: tuple[Axis, Axis] = ("x", "y")
    env_dim: int = field(default=2, init=False)

    def _indices(self) -> tuple[int, int, int]:
        i, j = (axis_index(a) for a in self.axes)
        if i == j:
            raise ValueError("axes must differ")
        (k,) = {0, 1, 2} - {i, j}
        return i, j, k

    def hamiltonian(self) -> np.ndarray:
        i, j, _ = self._indices()
        return 0.5 * (
            self.g1 * np.kron(PAULIS[i], PAULIS[i]) + self.g2 * np.kron(PAULIS[j], PAULIS[j])
        )

    def unitary(self) -> np.ndarray:
        """Closed form of ``exp(-i H tau)``; the two couplings commute."""
        i, j, k = self._indices()
        a, b = self.g1 * self.tau / 2, self.g2 * self.tau / 2
        return (
            np.cos(a) * np.cos(b) * np.eye(4)
            - 1j * np.sin(a) * np.cos(b) * np.kron(PAULIS[i], PAULIS[i])
            - 1j * np.cos(a) * np.sin(b) * np.kron(PAULIS[j], PAULIS[j])
            + np.sin(a) * np.sin(b) * np.kron(PAULIS[k], PAULIS[k])
        )

    def unitary_numeric(self) -> np.ndarray:
        return hermitian_exp(self.hamiltonian(), self.tau)


@dataclass(frozen=True)
class ControlledAxis:
    """``exp(+i g tau s_m) (x) |0><0| + exp(-i g tau s_m) (x) |1><1|``."""

    axis: Axis
    g: float
    tau: float
    env_dim: int = field(default=2, init=False)

    def system_unitary(self, bit: int) -> np.ndarray:
        sign = 1.0 if bit == 0 else -1.0
        angle = sign * self.g * self.tau
        return np.cos(angle) * IDENTITY2 + 1j * np.sin(angle) * PAULIS[axis_index(self.axis)]

    def unitary(self) -> np.ndarray:
        p0 = np.diag([1.0, 0.0])
        p1 = np.diag([0.0, 1.0])
        return np.kron(self.system_unitary(0), p0) + np.kron(self.system_unitary(1), p1)


@dataclass(frozen=True)
class Idle:
    """A slot in which the system does not interact."""

    tau: float
    env_dim: int = field(default=2, init=False)

    def unitary(self) -> np.ndarray:
        return np.eye(4, dtype=complex)


Collision = Union[HamiltonianXY, ControlledAxis, Idle]


def _maximally_mixed(d: int = 2) -> np.ndarray:
    return np.eye(d, dtype=complex) / d


def elementary_channel(collision: Collision, xi: Optional[np.ndarray] = None):
    """``rho -> tr_env[U (rho (x) xi) U^dag]`` for one collision."""
    xi = _maximally_mixed(collision.env_dim) if xi is None else np.asarray(xi, dtype=complex)
    U = collision.unitary()
    d = collision.env_dim

    def channel(rho):
        joint = U @ np.kron(rho, xi) @ U.conj().T
        return partial_trace_env(joint, d)

    return channel


def elementary_triple(collision: Collision, xi: Optional[np.ndarray] = None) -> PauliTriple:
    return tomography(elementary_channel(collision, xi))


def elementary_map_xy(g1: float, g2: float, tau: float) -> PauliTriple:
    """Single XY collision with a maximally mixed environment qubit.

    Equals ``(cos g2 tau, cos g1 tau, cos g1 tau cos g2 tau)``.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    return elementary_triple(HamiltonianXY(g1, g2, tau))


def stroboscopic_coupling(gamma: float, tau: float, model: str = "pair") -> float:
    """Coupling that turns a collision stream into a semigroup as ``tau -> 0``.

    ``model='pair'``: ``g = sqrt(2 gamma / tau)``; an XY term ``g s_i(x)s_i``
    then generates ``gamma/2 (s_i rho s_i - rho)``.
    ``model='controlled'``: ``g = sqrt(gamma / tau)``; a controlled-axis
    collision on a maximally mixed qubit then generates
    ``gamma (s_m rho s_m - rho)``.
    """
    if gamma < 0 or tau <= 0:
        raise ValueError("need gamma >= 0 and tau > 0")
    if model == "pair":
        return float(np.sqrt(2 * gamma / tau))
    if model == "controlled":
        return float(np.sqrt(gamma / tau))
    raise ValueError(f"unknown model {model!r}")


@dataclass(frozen=True)
class FactorizedIID:
    """Every collision uses a fresh particle in state ``xi`` (default ``I/2``)."""

    collision: Collision
    xi: Optional[np.ndarray] = None

    def elementary_triple(self) -> PauliTriple:
        return elementary_triple(self.collision, self.xi)

    def env_state(self) -> np.ndarray:
        return _maximally_mixed(self.collision.env_dim) if self.xi is None else np.asarray(self.xi)


@dataclass(frozen=True)
class Interleaved:
    """Collision ``k`` draws its particle from ``models[pattern[k % len(pattern)]]``."""

    models: tuple[FactorizedIID, ...]
    pattern: tuple[int, ...]

    def __post_init__(self):
        if not self.pattern:
            raise ValueError("pattern must be non-empty")
        if any(not 0 <= p < len(self.models) for p in self.pattern):
            raise ValueError("pattern refers to a missing model")

    def slot_model(self, k: int) -> FactorizedIID:
        return self.models[self.pattern[k % len(self.pattern)]]


@dataclass(frozen=True)
class BranchCorrelated:
    """Environment ``sum_b w_b |bits_b><bits_b|`` with controlled-axis collisions.

    ``slots`` holds one collision per step (``ControlledAxis`` or ``Idle``);
    every branch must provide at least as many bits as there are slots.
    """

    branches: tuple[tuple[float, tuple[int, ...]], ...]
    slots: tuple[Collision, ...]

    def __post_init__(self):
        weights = np.array([w for w, _ in self.branches], dtype=float)
        if np.any(weights < 0) or abs(weights.sum() - 1) > 1e-12:
            raise ValueError("branch weights must be non-negative and sum to 1")
        for c in self.slots:
            if not isinstance(c, (ControlledAxis, Idle)):
                raise NotControlledError(
                    f"branch-correlated environments need controlled-axis collisions, got {type(c).__name__}"
                )
        for _, bits in self.branches:
            if len(bits) < len(self.slots):
                raise ValueError("a branch has fewer bits than there are slots")


@dataclass(frozen=True)
class BlockMixture:
    """Direct-sum environment: with probability ``weights[m]`` the run is ``models[m]``."""

    weights: tuple[float, ...]
    models: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(w) != len(self.models):
            raise ValueError("one weight per block is required")
        if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
            raise ValueError("block weights must be non-negative and sum to 1")


def _compose(triples: np.ndarray, taus: np.ndarray, name: str) -> Trajectory:
    lambdas = np.vstack([np.ones((1, 3)), np.cumprod(triples, axis=0)])
    times = np.concatenate([[0.0], np.cumsum(taus)])
    return Trajectory(times, lambdas, name)


def run_factorized(
    collision: Collision,
    n: int,
    xi: Optional[np.ndarray] = None,
    validate_steps: int = 6,
) -> Trajectory:
    """``lambda(k tau) = elementary_triple**k`` for ``k = 0..n``.

    The first ``min(n, validate_steps)`` steps are re-derived from the full
    joint system-environment state and must agree within ``1e-10``.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    model = FactorizedIID(collision, xi)
    triple = np.asarray(model.elementary_triple())
    traj = _compose(np.tile(triple, (n, 1)), np.full(n, collision.tau), "factorized")
    k = min(n, validate_steps)
    if k > 0:
        from .dilation import joint_trajectory_factorized

        joint = joint_trajectory_factorized(model, k)
        err = np.max(np.abs(joint.lambdas - traj.lambdas[: k + 1]))
        if err > SIM_TOL:
            raise RuntimeError(f"factorized reduction disagrees with joint simulation ({err:.2e})")
    return traj


def run_interleaved(models: Sequence[FactorizedIID], pattern: Sequence[int], n: int) -> Trajectory:
    """Cycle through ``models`` following ``pattern``; slot ``k`` uses ``pattern[k % len]``."""
    model = Interleaved(tuple(models), tuple(pattern))
    elems = [np.asarray(m.elementary_triple()) for m in model.models]
    idx = [model.pattern[k % len(model.pattern)] for k in range(n)]
    triples = np.array([elems[i] for i in idx]).reshape(n, 3)
    taus = np.array([model.models[i].collision.tau for i in idx], dtype=float)
    return _compose(triples, taus, "interleaved")


def run_block_mixture(weights: Sequence[float], sub_runs: Sequence[Trajectory]) -> Trajectory:
    """Weighted sum of block runs; exact because blocks never couple."""
    w = np.asarray(weights, dtype=float)
    if len(w) != len(sub_runs) or not sub_runs:
        raise ValueError("one weight per sub-run is required")
    if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
        raise ValueError("weights must be non-negative and sum to 1")
    times = sub_runs[0].times
    for run in sub_runs[1:]:
        if run.times.shape != times.shape or np.max(np.abs(run.times - times)) > 1e-12:
            raise ValueError("sub-runs must share the collision grid")
    lambdas = np.tensordot(w, np.stack([r.lambdas for r in sub_runs]), axes=1)
    return Trajectory(times, lambdas, "block_mixture")


def branch_dephasing(
    weights: Sequence[float],
    bits: np.ndarray,
    axis: Axis,
    angles: np.ndarray,
    taus: np.ndarray,
    tol: float = SIM_TOL,
) -> Trajectory:
    """Array form of a single-axis branch-correlated run.

    ``bits`` is ``(branches, n)``; slot ``k`` rotates branch ``b`` by
    ``exp(+-i angles[k] s_m)`` (``+`` for bit 0) and ``angles[k] = 0`` marks
    an idle slot. The channel is ``sum_b w_b U_b . U_b^dag``, so the two
    transverse components equal ``sum_b w_b cos(2 phase_b)``. A non-zero
    ``sum_b w_b sin(2 phase_b)`` is a net rotation and raises ``ValueError``.
    """
    m = axis_index(axis)
    w = np.asarray(weights, dtype=float)
    signs = 1.0 - 2.0 * np.asarray(bits, dtype=float).reshape(w.size, -1)
    n = signs.shape[1]
    phase = np.cumsum(signs * np.asarray(angles, dtype=float)[:n], axis=1)
    coherence = w @ np.cos(2 * phase)
    rotation = w @ np.sin(2 * phase)
    if rotation.size and np.max(np.abs(rotation)) > tol:
        k = int(np.argmax(np.abs(rotation) > tol))
        raise ValueError(f"branch mixture is not Pauli diagonal after collision {k + 1}")
    lambdas = np.ones((n, 3))
    for i in range(3):
        if i != m:
            lambdas[:, i] = coherence
    return _compose_absolute(lambdas, np.asarray(taus, dtype=float)[:n], "branch_correlated")


def _branch_single_axis(model: BranchCorrelated, m: int, n: int, tol: float) -> Trajectory:
    bits = np.array([bits[:n] for _, bits in model.branches], dtype=float).reshape(len(model.branches), n)
    angles = np.array(
        [c.g * c.tau if isinstance(c, ControlledAxis) else 0.0 for c in model.slots[:n]]
    )
    taus = np.array([c.tau for c in model.slots[:n]], dtype=float)
    return branch_dephasing([w for w, _ in model.branches], bits, m + 1, angles, taus, tol)


def _branch_general(model: BranchCorrelated, n: int, tol: float) -> np.ndarray:
    weights = np.array([w for w, _ in model.branches])
    unitaries = np.tile(IDENTITY2, (len(model.branches), 1, 1))
    lambdas = np.empty((n, 3))
    for k in range(n):
        c = model.slots[k]
        if isinstance(c, ControlledAxis):
            step = np.stack([c.system_unitary(bits[k]) for _, bits in model.branches])
            unitaries = step @ unitaries
        images = np.einsum("bxy,jyz,bwz->bjxw", unitaries, _PAULI_STACK, unitaries.conj())
        ptm = 0.5 * np.einsum("ixw,bjwx,b->ij", _PAULI_STACK, images, weights).real
        off = ptm - np.diag(np.diag(ptm))
        if np.max(np.abs(off)) > tol:
            raise ValueError(
                f"branch mixture is not Pauli diagonal after collision {k + 1}"
            )
        lambdas[k] = np.diag(ptm)
    return lambdas


def run_branch_correlated(
    branches: Sequence[tuple[float, Sequence[int]]],
    collision: Union[Collision, Sequence[Collision]],
    n: Optional[int] = None,
    tol: float = SIM_TOL,
) -> Trajectory:
    """Structured simulation of a classically correlated bit-string environment.

    Each branch leaves the environment in a basis state and drives the
    system by ``prod_k exp(+-i g tau s_m)``; the channel is the weighted
    mixture of those conjugations. Cost is linear in ``n``.
    """
    if isinstance(collision, (HamiltonianXY, ControlledAxis, Idle)):
        if n is None:
            raise ValueError("n is required with a single collision")
        slots = (collision,) * n
    else:
        slots = tuple(collision)
        n = len(slots) if n is None else n
    model = BranchCorrelated(
        tuple((float(w), tuple(int(b) for b in bits)) for w, bits in branches), slots
    )
    axes = {axis_index(c.axis) for c in slots[:n] if isinstance(c, ControlledAxis)}
    if len(axes) <= 1:
        return _branch_single_axis(model, axes.pop() if axes else 0, n, tol)
    lambdas = _branch_general(model, n, tol)
    taus = np.array([c.tau for c in slots[:n]], dtype=float)
    return _compose_absolute(lambdas, taus, "branch_correlated")


def _compose_absolute(lambdas: np.ndarray, taus: np.ndarray, name: str) -> Trajectory:
    full = np.vstack([np.ones((1, 3)), lambdas.reshape(-1, 3)])
    return Trajectory(np.concatenate([[0.0], np.cumsum(taus)]), full, name)


def ghz_branches(n: int) -> list[tuple[float, tuple[int, ...]]]:
    """``(|0...0><0...0| + |1...1><1...1|) / 2``."""
    return [(0.5, (0,) * n), (0.5, (1,) * n)]


_BLOCK_VALIDATE_STEPS = 4


def _validate_block_mixture(model: BlockMixture, traj: Trajectory, k: int) -> None:
    if k == 0 or not all(isinstance(m, (FactorizedIID, Interleaved)) for m in model.models):
        return
    from .dilation import joint_trajectory_block_mixture

    joint = joint_trajectory_block_mixture(model.weights, model.models, k)
    err = np.max(np.abs(joint.lambdas - traj.lambdas[: k + 1]))
    if err > SIM_TOL:
        raise RuntimeError(f"block reduction disagrees with direct-sum simulation ({err:.2e})")


def simulate(model, n: int) -> Trajectory:
    """Run any environment model for ``n`` collisions."""
    if isinstance(model, FactorizedIID):
        return run_factorized(model.collision, n, model.xi)
    if isinstance(model, Interleaved):
        return run_interleaved(model.models, model.pattern, n)
    if isinstance(model, BranchCorrelated):
        return run_branch_correlated(model.branches, model.slots, n)
    if isinstance(model, BlockMixture):
        traj = run_block_mixture(model.weights, [simulate(m, n) for m in model.models])
        _validate_block_mixture(model, traj, min(n, _BLOCK_VALIDATE_STEPS))
        return traj
    raise TypeError(f"unknown environment model {type(model).__name__}")
