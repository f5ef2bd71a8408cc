"""Distinguishability, capacity, volume and entanglement annihilation along Pauli trajectories.

Conventions: relative entropy uses natural logs (nats); the classical
capacity uses base 2 (bits).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .core import TOL, Trajectory, TripleLike, apply_pauli_channel

__all__ = [
    "MONOTONICITY_TOL",
    "QUANTITIES",
    "MonotonicityReport",
    "volume",
    "binary_entropy",
    "classical_capacity",
    "trace_distance",
    "relative_entropy",
    "monotonicity_scan",
    "refine_violations",
    "is_entanglement_annihilating_2copy",
    "t_ea_dephasing_mixture",
    "ea_threshold_weight_norm",
]

MONOTONICITY_TOL = 1e-10
_EIG_CLIP = -1e-12


def volume(t: TripleLike) -> float:
    """Bloch-ellipsoid volume relative to the ball, ``|l1 l2 l3|``."""
    return float(abs(np.prod(np.asarray(t, dtype=float))))


def binary_entropy(p: float) -> float:
    """``h2(p)`` in bits with ``h2(0) = h2(1) = 0``."""
    if p <= 0 or p >= 1:
        return 0.0
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))


def classical_capacity(t: TripleLike) -> float:
    """Classical capacity of a Pauli channel in bits: ``1 - h2((1 - max|lambda|) / 2)``."""
    top = float(np.max(np.abs(np.asarray(t, dtype=float))))
    return 1.0 - binary_entropy(0.5 * (1 - min(top, 1.0)))


def trace_distance(r1: np.ndarray, r2: np.ndarray) -> float:
    """``||r1 - r2||_1 / 2`` from the eigenvalues of the Hermitian difference."""
    diff = np.asarray(r1, dtype=complex) - np.asarray(r2, dtype=complex)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))


def _log_on_support(w: np.ndarray) -> np.ndarray:
    out = np.zeros_like(w)
    pos = w > 0
    out[pos] = np.log(w[pos])
    return out


def relative_entropy(r1: np.ndarray, r2: np.ndarray, support_tol: float = 1e-12) -> float:
    """``tr[r1 (ln r1 - ln r2)]`` in nats; ``inf`` if ``supp r1`` is not inside ``supp r2``."""
    r1 = np.asarray(r1, dtype=complex)
    r2 = np.asarray(r2, dtype=complex)
    w1, v1 = np.linalg.eigh(r1)
    w2, v2 = np.linalg.eigh(r2)
    if w1.min() < _EIG_CLIP or w2.min() < _EIG_CLIP:
        raise ValueError("states must be positive semidefinite")
    w1 = np.where(w1 > support_tol, w1, 0.0)
    w2 = np.where(w2 > support_tol, w2, 0.0)
    kernel = v2[:, w2 == 0]
    if kernel.size and np.real(np.trace(kernel.conj().T @ r1 @ kernel)) > support_tol:
        return float("inf")
    first = float(np.sum(w1 * _log_on_support(w1)))
    # tr[r1 ln r2] = sum_j <v_j| r1 |v_j> ln w2_j over the support of r2
    overlaps = np.real(np.einsum("ij,ik,kj->j", v2.conj(), r1, v2))
    second = float(np.sum(overlaps * _log_on_support(w2)))
    return max(first - second, 0.0)


@dataclass(frozen=True)
class MonotonicityReport:
    """Values of a quantity along a trajectory and the intervals where it grows.

    ``violations`` lists merged ``(t_start, t_end)`` sample intervals over
    which the value increased by more than ``tol``.
    """

    quantity: str
    times: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    violations: list[tuple[float, float]]
    tol: float = MONOTONICITY_TOL
    units: str = ""

    @property
    def monotone(self) -> bool:
        return not self.violations


def _pair_quantity(fn: Callable[[np.ndarray, np.ndarray], float]):
    def evaluate(triple, pair):
        r1, r2 = pair
        return fn(apply_pauli_channel(triple, r1), apply_pauli_channel(triple, r2))

    return evaluate


QUANTITIES: dict[str, tuple[Callable, str]] = {
    "trace_distance": (_pair_quantity(trace_distance), ""),
    "relative_entropy": (_pair_quantity(relative_entropy), "nats"),
    "capacity": (lambda triple, pair: classical_capacity(triple), "bits"),
    "volume": (lambda triple, pair: volume(triple), ""),
}


def _increase_intervals(times: np.ndarray, values: np.ndarray, tol: float) -> list[tuple[float, float]]:
    merged: list[list[float]] = []
    with np.errstate(invalid="ignore"):
        up = np.diff(values) > tol
    for i in np.nonzero(up)[0]:
        a, b = float(times[i]), float(times[i + 1])
        if merged and merged[-1][1] == a:
            merged[-1][1] = b
        else:
            merged.append([a, b])
    return [(a, b) for a, b in merged]


def monotonicity_scan(
    traj: Trajectory,
    pair: Optional[Sequence[np.ndarray]] = None,
    quantity: str = "trace_distance",
    tol: float = MONOTONICITY_TOL,
) -> MonotonicityReport:
    """Evaluate a quantity along ``traj`` and flag increases between samples.

    Every supported quantity is non-increasing under P-divisible dynamics.
    ``capacity`` and ``volume`` ignore ``pair``.
    """
    if quantity not in QUANTITIES:
        raise ValueError(f"unknown quantity {quantity!r}; choose from {sorted(QUANTITIES)}")
    fn, units = QUANTITIES[quantity]
    if pair is None and quantity in ("trace_distance", "relative_entropy"):
        raise ValueError(f"{quantity} needs a pair of states")
    values = np.array([fn(row, pair) for row in traj.lambdas], dtype=float)
    return MonotonicityReport(
        quantity, traj.times, values, _increase_intervals(traj.times, values, tol), tol, units
    )


def refine_violations(
    family,
    t_max: float,
    pair: Optional[Sequence[np.ndarray]] = None,
    quantity: str = "trace_distance",
    n_points: int = 101,
    max_doublings: int = 8,
    tol: float = MONOTONICITY_TOL,
) -> MonotonicityReport:
    """Scan an analytic family on a grid that doubles until violations settle.

    Two successive grids agree when they find the same number of intervals
    and every endpoint moves by at most one cell of the coarser grid.
    """
    prev: Optional[MonotonicityReport] = None
    n = n_points
    for _ in range(max_doublings + 1):
        times = np.linspace(0.0, t_max, n)
        report = monotonicity_scan(family.trajectory(times), pair, quantity, tol)
        if prev is not None and len(prev.violations) == len(report.violations):
            cell = t_max / (len(prev.times) - 1)
            if all(
                abs(a0 - a1) <= cell and abs(b0 - b1) <= cell
                for (a0, b0), (a1, b1) in zip(prev.violations, report.violations)
            ):
                return report
        prev = report
        n = 2 * n - 1
    return prev


def is_entanglement_annihilating_2copy(t: TripleLike, tol: float = TOL) -> bool:
    """Whether the two-copy map destroys all entanglement: ``sum lambda_i^2 <= 1``."""
    lam = np.asarray(t, dtype=float)
    return bool(np.dot(lam, lam) <= 1 + tol)


def ea_threshold_weight_norm(x: float) -> float:
    """``sum p^2`` at which a dephasing mixture sits on the two-copy threshold.

    ``x = exp(-2 gamma t)`` is the constituent coherence; equals
    ``(1 - 2x - x^2) / (1 - x)^2``.
    """
    return (1 - 2 * x - x * x) / (1 - x) ** 2


def t_ea_dephasing_mixture(p, gamma: float, rtol: float = 1e-10) -> Optional[float]:
    """First time the dephasing mixture with weights ``p`` becomes two-copy annihilating.

    ``h(t) = sum_i lambda_i(t)^2 - 1`` decreases from 2 towards
    ``sum p^2 - 1``, so a root exists iff ``sum p^2 < 1``; otherwise
    ``None`` (the time is infinite).
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    w = np.asarray(p, dtype=float)
    if w.shape != (3,) or np.any(w < -TOL) or abs(w.sum() - 1) > TOL:
        raise ValueError("p must be a probability vector of length 3")
    if np.dot(w, w) >= 1 - 1e-14:
        return None

    def h(t: float) -> float:
        lam = w + (1 - w) * np.exp(-2 * gamma * t)
        return float(np.dot(lam, lam) - 1)

    hi = 1.0 / gamma
    while h(hi) > 0:
        hi *= 2
    return float(brentq(h, 0.0, hi, xtol=1e-300, rtol=rtol * 1e-2))
