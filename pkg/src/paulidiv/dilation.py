"""Brute-force joint system-environment simulation.

Slow reference for the structured simulators in :mod:`paulidiv.collision`.
The joint register is ``system (2) x label (L) x particle_1 (2) x ... x
particle_n (2)``. The label is a classical block index that stays diagonal
and only matters for block-mixture environments (``L = 1`` otherwise).
Slot ``k`` applies ``sum_l |l><l| (x) U_{k,l}`` to the system, the label and
particle ``k``.

The environment state is diagonalised once and every (probe ket,
environment eigenvector) pair is propagated as a joint state vector; the
reduced system states are the weighted sums of the partial traces. This is
exact and avoids storing ``2^(n+1)``-dimensional density matrices.
"""
from __future__ import annotations

from functools import reduce
from typing import Callable, Sequence

import numpy as np

from .core import PROBE_STATES, SIM_TOL, Trajectory, triple_from_probe_images

__all__ = [
    "joint_trajectory",
    "joint_trajectory_factorized",
    "joint_trajectory_interleaved",
    "joint_trajectory_branch",
    "joint_trajectory_block_mixture",
    "MAX_PARTICLES",
]

MAX_PARTICLES = 10


def _apply(psi: np.ndarray, gate: np.ndarray, sites: tuple[int, ...]) -> np.ndarray:
    """Apply a gate tensor (out legs, then in legs) to a batch of state tensors."""
    m = len(sites)
    axes = [1 + s for s in sites]
    out = np.tensordot(gate, psi, axes=(list(range(m, 2 * m)), axes))
    return np.moveaxis(out, list(range(m)), axes)


def _controlled_gate(unitaries: Sequence[np.ndarray]) -> np.ndarray:
    """Tensor of ``sum_l |l><l| (x) U_l`` with legs (sys, label, particle) out then in."""
    L = len(unitaries)
    gate = np.zeros((2, L, 2, 2, L, 2), dtype=complex)
    for l, U in enumerate(unitaries):
        gate[:, l, :, :, l, :] = np.asarray(U, dtype=complex).reshape(2, 2, 2, 2)
    return gate


def joint_trajectory(
    env_state: np.ndarray,
    n_labels: int,
    slot_unitary: Callable[[int, int], np.ndarray],
    taus: Sequence[float],
    tol: float = SIM_TOL,
    name: str = "joint",
) -> Trajectory:
    """Propagate all probe states through ``len(taus)`` slots.

    ``env_state`` is the ``(L 2^n) x (L 2^n)`` density matrix of label and
    particles; ``slot_unitary(k, l)`` is the 4x4 system-particle unitary used
    in slot ``k`` inside block ``l``.
    """
    n = len(taus)
    if n > MAX_PARTICLES:
        raise ValueError(f"joint simulation is limited to {MAX_PARTICLES} particles")
    dims = (2, n_labels) + (2,) * n
    D_env = int(np.prod(dims[1:]))
    env_state = np.asarray(env_state, dtype=complex)
    if env_state.shape != (D_env, D_env):
        raise ValueError(f"environment state must be {D_env}x{D_env}")
    w, v = np.linalg.eigh(env_state)
    keep = w > 1e-15
    w, v = w[keep], v[:, keep]
    # pure probes (I +- s_j)/2; I/2 follows by linearity
    kets = [np.linalg.eigh(p)[1][:, -1] for p in PROBE_STATES[1:]]
    psi = np.stack([np.kron(ket, v[:, i]) for ket in kets for i in range(w.size)])
    psi = psi.reshape((psi.shape[0],) + dims)
    weights = np.tile(w, len(kets))
    lambdas = [np.ones(3)]
    for k in range(n):
        gate = _controlled_gate([slot_unitary(k, l) for l in range(n_labels)])
        psi = _apply(psi, gate, (0, 1, 2 + k))
        flat = psi.reshape(psi.shape[0], 2, D_env)
        partial = np.einsum("bae,bce,b->bac", flat, flat.conj(), weights)
        images = partial.reshape(len(kets), w.size, 2, 2).sum(axis=1)
        images = [0.5 * (images[4] + images[5])] + list(images)
        lambdas.append(np.asarray(triple_from_probe_images(images, tol)))
    times = np.concatenate([[0.0], np.cumsum(taus)])
    return Trajectory(times, np.array(lambdas), name)


def _product(states: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, states, np.ones((1, 1), dtype=complex))


def _basis_string_state(branches) -> np.ndarray:
    n = len(branches[0][1])
    D = 2**n
    state = np.zeros((D, D), dtype=complex)
    for w, bits in branches:
        idx = int("".join(str(int(b)) for b in bits), 2) if n else 0
        state[idx, idx] += w
    return state


def _model_parts(model, n: int):
    """Environment state, per-slot unitaries and durations of one model."""
    from .collision import BranchCorrelated, FactorizedIID, Interleaved

    if isinstance(model, BranchCorrelated):
        slots = model.slots[:n]
        branches = [(w, tuple(bits[:n])) for w, bits in model.branches]
        return _basis_string_state(branches), [c.unitary() for c in slots], [c.tau for c in slots]
    if isinstance(model, FactorizedIID):
        model = Interleaved((model,), (0,))
    if isinstance(model, Interleaved):
        chosen = [model.slot_model(k) for k in range(n)]
        env = _product([m.env_state() for m in chosen])
        return env, [m.collision.unitary() for m in chosen], [m.collision.tau for m in chosen]
    raise TypeError(f"no joint simulation for {type(model).__name__}")


def _single(model, n: int, name: str) -> Trajectory:
    env, unitaries, taus = _model_parts(model, n)
    return joint_trajectory(env, 1, lambda k, l: unitaries[k], taus, name=name)


def joint_trajectory_factorized(model, n: int) -> Trajectory:
    """Joint run of :class:`~paulidiv.collision.FactorizedIID` for ``n`` collisions."""
    return _single(model, n, "joint_factorized")


def joint_trajectory_interleaved(model, n: int) -> Trajectory:
    return _single(model, n, "joint_interleaved")


def joint_trajectory_branch(model, n: int | None = None) -> Trajectory:
    """Joint run of :class:`~paulidiv.collision.BranchCorrelated`."""
    n = len(model.slots) if n is None else n
    return _single(model, n, "joint_branch")


def joint_trajectory_block_mixture(weights: Sequence[float], models: Sequence, n: int) -> Trajectory:
    """Joint run of a direct-sum environment; each block may be any single model."""
    parts = [_model_parts(m, n) for m in models]
    taus = parts[0][2]
    for _, _, t in parts[1:]:
        if not np.allclose(t, taus, rtol=0, atol=1e-12):
            raise ValueError("blocks must share the collision grid")
    L = len(models)
    env = np.zeros((L * 2**n, L * 2**n), dtype=complex)
    for l, (w, (state, _, _)) in enumerate(zip(weights, parts)):
        env[l * 2**n : (l + 1) * 2**n, l * 2**n : (l + 1) * 2**n] = w * state
    return joint_trajectory(
        env, L, lambda k, l: parts[l][1][k], taus, name="joint_block_mixture"
    )
