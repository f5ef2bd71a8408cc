"""Closed-form Pauli dynamical maps used as classifier checks and synthesis targets.

Every family is evaluated vectorised over time: ``family.lam(t)`` returns an
array of shape ``t.shape + (3,)``. Axes are always explicit, 1-based or
``'x'/'y'/'z'``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .core import TOL, KappaVector, PauliTriple, Trajectory, axis_index, is_cp
from .divisibility import kappa_analytic

__all__ = [
    "SemigroupRates",
    "MixtureWeights",
    "AnalyticFamily",
    "gamma_from_Gamma",
    "Gamma_from_gamma",
    "pauli_semigroup",
    "ultimate_semigroup",
    "dephasing_mixture",
    "eternal_family",
    "eternal_constituents",
    "oscillatory_dephasing",
    "oscillatory_depolarizing",
    "volume_example",
    "constant_map",
    "FAMILIES",
]

Axis = Union[int, str]

_GAMMA_MATRIX = 0.5 * np.array([[-1, 1, 1], [1, -1, 1], [1, 1, -1]], dtype=float)
_DECOHERENCE_MATRIX = np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]], dtype=float)


def gamma_from_Gamma(G: Sequence[float]) -> tuple[float, float, float]:
    """Dissipator rates from decoherence rates."""
    return tuple(map(float, _GAMMA_MATRIX @ np.asarray(G, dtype=float)))


def Gamma_from_gamma(g: Sequence[float]) -> tuple[float, float, float]:
    """Decoherence rates from dissipator rates: ``Gamma_j`` is the sum of the other two."""
    return tuple(map(float, _DECOHERENCE_MATRIX @ np.asarray(g, dtype=float)))


@dataclass(frozen=True)
class SemigroupRates:
    Gamma: tuple[float, float, float]

    @property
    def gamma(self) -> tuple[float, float, float]:
        return gamma_from_Gamma(self.Gamma)

    @classmethod
    def from_gamma(cls, g: Sequence[float]) -> "SemigroupRates":
        return cls(Gamma_from_gamma(g))

    @property
    def cp_generating(self) -> bool:
        return min(self.gamma) >= -TOL


@dataclass(frozen=True)
class MixtureWeights:
    p1: float
    p2: float
    p3: float

    def __post_init__(self):
        p = np.array([self.p1, self.p2, self.p3])
        if np.any(p < -TOL) or abs(p.sum() - 1) > TOL:
            raise ValueError(f"weights {tuple(p)} are not on the probability simplex")

    def as_array(self) -> np.ndarray:
        return np.array([self.p1, self.p2, self.p3], dtype=float)


def _weights(p) -> np.ndarray:
    if isinstance(p, MixtureWeights):
        return p.as_array()
    return MixtureWeights(*map(float, p)).as_array()


@dataclass(frozen=True)
class AnalyticFamily:
    name: str
    parameters: dict
    lam: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    dlam: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    kappa_fn: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)
    claims_cp: bool = True

    def __call__(self, t: float) -> PauliTriple:
        return PauliTriple(*map(float, self.lam(np.asarray(float(t)))))

    def derivative(self, t: float) -> tuple[float, float, float]:
        return tuple(map(float, self.dlam(np.asarray(float(t)))))

    def kappa(self, t: float) -> KappaVector:
        if self.kappa_fn is not None:
            return KappaVector(*map(float, self.kappa_fn(np.asarray(float(t)))))
        return kappa_analytic(self, self.derivative, t)

    def trajectory(self, times) -> Trajectory:
        times = np.asarray(times, dtype=float)
        return Trajectory(times, self.lam(times), self.name)

    def stays_cp(self, times, tol: float = 1e-10) -> bool:
        return all(is_cp(row, tol) for row in self.lam(np.asarray(times, dtype=float)))


def _stack(*cols) -> np.ndarray:
    return np.stack(np.broadcast_arrays(*cols), axis=-1)


def _place(t, values: dict[int, np.ndarray]) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return _stack(*(values[i] * np.ones_like(t) for i in range(3)))


def pauli_semigroup(G: Sequence[float]) -> AnalyticFamily:
    """``lambda_j(t) = exp(-Gamma_j t)``; flagged non-CP when some dissipator rate is negative."""
    rates = SemigroupRates(tuple(map(float, G)))
    Gam = np.asarray(rates.Gamma)

    def lam(t):
        return np.exp(-np.multiply.outer(np.asarray(t, dtype=float), Gam))

    def dlam(t):
        return -Gam * lam(t)

    def kappa(t):
        return -Gam * np.ones(np.shape(t) + (3,))

    return AnalyticFamily(
        "semigroup", {"Gamma": list(rates.Gamma)}, lam, dlam, kappa, rates.cp_generating
    )


def _two_axes(axes: Sequence[Axis]) -> tuple[int, int, int]:
    i, j = (axis_index(a) for a in axes)
    if i == j:
        raise ValueError("axes must differ")
    (k,) = {0, 1, 2} - {i, j}
    return i, j, k


def ultimate_semigroup(gi: float, gj: float, axes: Sequence[Axis] = ("x", "y")) -> AnalyticFamily:
    """Two-term dissipator ``gi/2 (s_i . s_i - .) + gj/2 (s_j . s_j - .)``."""
    if gi < 0 or gj < 0:
        raise ValueError("rates must be non-negative")
    i, j, k = _two_axes(axes)
    rate = np.zeros(3)
    rate[i], rate[j], rate[k] = gj, gi, gi + gj
    fam = pauli_semigroup(rate)
    params = {"gamma_i": gi, "gamma_j": gj, "axes": [i + 1, j + 1]}
    return AnalyticFamily("ultimate", params, fam.lam, fam.dlam, fam.kappa_fn, True)


def dephasing_mixture(p, gamma: float) -> AnalyticFamily:
    """Mixture of the three pure dephasings generated by ``gamma (s_m . s_m - .)``.

    Each constituent keeps ``lambda_m = 1`` and damps the other two as
    ``exp(-2 gamma t)``, so ``lambda_m(t) = p_m + (1 - p_m) exp(-2 gamma t)``.
    """
    w = _weights(p)

    def lam(t):
        decay = np.exp(-2 * gamma * np.asarray(t, dtype=float))
        return w + np.multiply.outer(decay, 1 - w)

    def dlam(t):
        decay = np.exp(-2 * gamma * np.asarray(t, dtype=float))
        return np.multiply.outer(-2 * gamma * decay, 1 - w)

    return AnalyticFamily("dephasing_mixture", {"p": list(w), "gamma": gamma}, lam, dlam)


def eternal_family(p, gi: float, gj: float, axes: Sequence[Axis] = ("x", "y")) -> AnalyticFamily:
    """Mixture of an ultimate-CP semigroup with two pure dephasings.

    Weights ``p1, p2, p3`` go to the two-term semigroup, the ``i``-dephasing
    (rate ``gi``) and the ``j``-dephasing (rate ``gj``) respectively.
    """
    p1, p2, p3 = _weights(p)
    i, j, k = _two_axes(axes)

    def lam(t):
        t = np.asarray(t, dtype=float)
        ei, ej = np.exp(-gi * t), np.exp(-gj * t)
        cols = {
            i: (p1 + p3) * ej + p2,
            j: (p1 + p2) * ei + p3,
            k: p1 * ei * ej + p2 * ei + p3 * ej,
        }
        return _place(t, cols)

    def dlam(t):
        t = np.asarray(t, dtype=float)
        ei, ej = np.exp(-gi * t), np.exp(-gj * t)
        cols = {
            i: -gj * (p1 + p3) * ej,
            j: -gi * (p1 + p2) * ei,
            k: -(gi + gj) * p1 * ei * ej - gi * p2 * ei - gj * p3 * ej,
        }
        return _place(t, cols)

    def kappa(t):
        t = np.asarray(t, dtype=float)
        Ei, Ej = np.exp(gi * t), np.exp(gj * t)
        cols = {
            i: -gj * (p1 + p3) / (p1 + p3 + p2 * Ej),
            j: -gi * (p1 + p2) / (p1 + p2 + p3 * Ei),
            k: -(gi * (p1 + p2 * Ej) + gj * (p1 + p3 * Ei)) / (p1 + p2 * Ej + p3 * Ei),
        }
        return _place(t, cols)

    params = {"p": [p1, p2, p3], "gamma_i": gi, "gamma_j": gj, "axes": [i + 1, j + 1]}
    return AnalyticFamily("eternal", params, lam, dlam, kappa)


def eternal_constituents(p, gi: float, gj: float, axes: Sequence[Axis] = ("x", "y")):
    """The three semigroups mixed by :func:`eternal_family`, in weight order."""
    return (
        ultimate_semigroup(gi, gj, axes),
        ultimate_semigroup(gi, 0.0, axes),
        ultimate_semigroup(0.0, gj, axes),
    )


def oscillatory_dephasing(g: float, axis: Axis = "z") -> AnalyticFamily:
    """``cos^2(gt) rho + sin^2(gt) s_m rho s_m``: the GHZ-environment dephasing."""
    if g <= 0:
        raise ValueError("g must be positive")
    m = axis_index(axis)

    def lam(t):
        t = np.asarray(t, dtype=float)
        c = np.cos(2 * g * t)
        return _place(t, {n: (np.ones_like(t) if n == m else c) for n in range(3)})

    def dlam(t):
        t = np.asarray(t, dtype=float)
        d = -2 * g * np.sin(2 * g * t)
        return _place(t, {n: (np.zeros_like(t) if n == m else d) for n in range(3)})

    return AnalyticFamily("oscillatory_dephasing", {"g": g, "axis": m + 1}, lam, dlam)


def oscillatory_depolarizing(g: float) -> AnalyticFamily:
    """Equal-weight mixture of the three oscillatory dephasings: ``lambda = (1 + 2 cos 2gt)/3``."""
    if g <= 0:
        raise ValueError("g must be positive")

    def lam(t):
        t = np.asarray(t, dtype=float)
        v = (1 + 2 * np.cos(2 * g * t)) / 3
        return _stack(v, v, v)

    def dlam(t):
        t = np.asarray(t, dtype=float)
        d = -4 * g * np.sin(2 * g * t) / 3
        return _stack(d, d, d)

    return AnalyticFamily("oscillatory_depolarizing", {"g": g}, lam, dlam)


def volume_example() -> AnalyticFamily:
    """Contracts the Bloch-ellipsoid volume monotonically although lambda1, lambda2 oscillate."""

    def lam(t):
        t = np.asarray(t, dtype=float)
        e2 = np.exp(-2 * t)
        return _stack(
            e2 * (1 - 0.1 * (1 - np.cos(40 * t))),
            e2 * (1 - 0.1 * np.sin(40 * t)),
            np.exp(-4 * t),
        )

    def dlam(t):
        t = np.asarray(t, dtype=float)
        e2 = np.exp(-2 * t)
        a = 1 - 0.1 * (1 - np.cos(40 * t))
        b = 1 - 0.1 * np.sin(40 * t)
        return _stack(
            e2 * (-2 * a - 4 * np.sin(40 * t)),
            e2 * (-2 * b - 4 * np.cos(40 * t)),
            -4 * np.exp(-4 * t),
        )

    return AnalyticFamily("volume_example", {}, lam, dlam)


def constant_map(triple: Sequence[float]) -> AnalyticFamily:
    """The same triple at every time (not a dynamical map unless it is the identity)."""
    value = np.asarray(triple, dtype=float)
    if value.shape != (3,):
        raise ValueError("triple must have three entries")

    def lam(t):
        return np.broadcast_to(value, np.shape(t) + (3,)).copy()

    def dlam(t):
        return np.zeros(np.shape(t) + (3,))

    return AnalyticFamily(
        "constant", {"lambda": value.tolist()}, lam, dlam, claims_cp=is_cp(value)
    )


# Name -> constructor, for the command line.
FAMILIES = {
    "semigroup": pauli_semigroup,
    "ultimate": ultimate_semigroup,
    "dephasing_mixture": dephasing_mixture,
    "eternal": eternal_family,
    "oscillatory_dephasing": oscillatory_dephasing,
    "oscillatory_depolarizing": oscillatory_depolarizing,
    "volume_example": volume_example,
    "constant": constant_map,
}
