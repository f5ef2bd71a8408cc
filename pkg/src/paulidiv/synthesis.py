"""Compile Pauli dynamical maps into collision schedules.

A single axis is driven by controlled-axis collisions with a two-branch
environment (a bit string and its complement, weight 1/2 each). After ``k``
slots the branches have picked up opposite phases ``+-g tau m(k)`` with
``m = n0 - n1``, so the transverse coherence is ``cos(2 g tau m(k))``.
Choosing the bits greedily makes that follow a target coherence ``f(t)``.

A general CP Pauli map mixes three such single-axis dephasings in a
direct-sum environment with block weights ``p_m``. Block ``m`` realises
``f_m = 1 - 2 q_m / p_m`` and the mixture gives
``lambda_1 = p_1 + p_2 f_2 + p_3 f_3`` (cyclically), which is exactly the
target whenever ``q_m <= p_m``. Slots are assigned round-robin x, y, z; a
block only interacts in its own slots.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .core import TOL, Trajectory, axis_index, q_matrix_from_lambdas
from .collision import (
    ControlledAxis,
    Idle,
    branch_dephasing,
    run_block_mixture,
    run_branch_correlated,
)

__all__ = [
    "CouplingTooWeak",
    "NonCPTargetError",
    "StroboscopicLimitError",
    "DephasingSchedule",
    "PauliSchedule",
    "unwrap_phase",
    "schedule_dephasing",
    "w0_profile",
    "required_coupling",
    "minimal_coupling",
    "axis_targets",
    "schedule_pauli",
    "verify_schedule",
    "verify_dephasing",
    "permute_windows",
    "schedule_to_json",
    "schedule_from_json",
    "SCHEDULE_FORMAT",
]

SCHEDULE_FORMAT = "paulidiv.schedule/1"
DEFAULT_MAX_PHASE_LAG = 0.1
_AXES = "xyz"


class CouplingTooWeak(ValueError):
    """The target phase moves faster than ``2 g tau`` per slot."""

    def __init__(self, message: str, axis: int, slot: int, required_g: float):
        super().__init__(message)
        self.axis = axis
        self.slot = slot
        self.required_g = required_g


class NonCPTargetError(ValueError):
    """The target leaves the CP tetrahedron; ``time`` is the first violating sample."""

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


class StroboscopicLimitError(ValueError):
    """``w0`` diverges: ``|f| = 1`` with ``f' != 0``; scale ``g`` like ``1/sqrt(tau)``."""


@dataclass(frozen=True)
class DephasingSchedule:
    """Bit string for one axis plus the coherence it realises.

    ``times``, ``target_f``, ``achieved_f`` and ``phase`` have one entry per
    slot boundary of this axis, starting with the initial instant.
    """

    axis: int
    g: float
    tau: float
    bits: tuple[int, ...]
    times: np.ndarray = field(repr=False)
    target_f: np.ndarray = field(repr=False)
    phase: np.ndarray = field(repr=False)

    @property
    def m(self) -> np.ndarray:
        """``n0 - n1`` after each slot."""
        steps = 1 - 2 * np.asarray(self.bits, dtype=int)
        return np.concatenate([[0], np.cumsum(steps)])

    @property
    def achieved_f(self) -> np.ndarray:
        return np.cos(2 * self.g * self.tau * self.m)

    @property
    def max_error(self) -> float:
        return float(np.max(np.abs(self.achieved_f - self.target_f)))


@dataclass(frozen=True)
class PauliSchedule:
    """Three single-axis schedules sharing one slot sequence.

    ``slot_axes[k]`` is the axis (0, 1, 2) active in slot ``k``; ``weights``
    are the direct-sum block weights.
    """

    g: float
    tau: float
    weights: tuple[float, float, float]
    axes: tuple[DephasingSchedule, DephasingSchedule, DephasingSchedule]
    slot_axes: tuple[int, ...]
    target_name: str = ""
    target_times: Optional[np.ndarray] = field(default=None, repr=False)
    target_lambdas: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def n_slots(self) -> int:
        return len(self.slot_axes)

    @property
    def times(self) -> np.ndarray:
        return self.tau * np.arange(self.n_slots + 1)

    def assignment_sets(self) -> tuple[frozenset, frozenset, frozenset]:
        return tuple(
            frozenset(k for k, a in enumerate(self.slot_axes) if a == m) for m in range(3)
        )


def unwrap_phase(f_values: Sequence[float], tol: float = 1e-9) -> np.ndarray:
    """Continuous ``theta`` with ``cos theta = f`` and ``theta[0] = 0``.

    Candidates are ``2 pi j +- arccos f``. Those whose move from the
    previous phase exceeds the shortest move by more than the previous step
    are discarded; of the rest, the one closest to the linear extrapolation
    is kept. The phase then passes straight through ``|f| = 1`` crossings
    and turns back at tangencies. Ties go to the larger candidate, which
    makes the phase start upward.
    """
    f = np.asarray(f_values, dtype=float)
    if np.any(np.abs(f) > 1 + tol):
        bad = int(np.argmax(np.abs(f) > 1 + tol))
        raise ValueError(f"|f| > 1 at sample {bad} (f = {f[bad]})")
    if abs(f[0] - 1) > tol:
        raise ValueError(f"f must start at 1, got {f[0]}")
    principal = np.arccos(np.clip(f, -1.0, 1.0)).tolist()
    two_pi = 2 * math.pi
    theta = [0.0] * len(principal)
    prev2 = prev = 0.0
    for k in range(1, len(principal)):
        guess = 2 * prev - prev2 if k >= 2 else prev
        a = principal[k]
        cands = []
        for c in (a, -a):
            base = c + two_pi * round((prev - c) / two_pi)
            cands.extend((base - two_pi, base, base + two_pi))
        # stay continuous: only moves about as short as the best one qualify
        reach = min(abs(c - prev) for c in cands) + abs(prev - prev2) + 1e-12
        best = None
        for c in cands:
            if abs(c - prev) > reach:
                continue
            if best is None or abs(c - guess) < abs(best - guess) or (
                abs(c - guess) == abs(best - guess) and c > best
            ):
                best = c
        theta[k] = best
        prev2, prev = prev, best
    return np.array(theta)


def _greedy_m(theta: np.ndarray, step: float) -> np.ndarray:
    """``m(k) = m(k-1) +- 1`` nearest to ``theta[k] / step``; ties go up (bit 0)."""
    m = [0] * len(theta)
    cur = 0
    for k, target in enumerate(theta.tolist()[1:], start=1):
        if abs(step * (cur + 1) - target) <= abs(step * (cur - 1) - target):
            cur += 1
        else:
            cur -= 1
        m[k] = cur
    return np.array(m, dtype=np.int64)


def _excess_lag(theta: np.ndarray, m: np.ndarray, step: float) -> np.ndarray:
    """Tracking lag beyond the one-step quantization that the greedy walk always allows."""
    return np.abs(step * m - theta) - step


def _check_lag(theta: np.ndarray, m: np.ndarray, g: float, tau: float, axis: int, max_lag: float) -> None:
    lag = _excess_lag(theta, m, 2 * g * tau)
    worst = int(np.argmax(lag))
    if lag[worst] > max_lag:
        dtheta = float(np.max(np.abs(np.diff(theta)))) if theta.size > 1 else 0.0
        raise CouplingTooWeak(
            f"axis {_AXES[axis]}: phase lag beyond one step {lag[worst]:.4g} rad after slot {worst} "
            f"exceeds {max_lag:.4g}; raise g (a lag-free schedule needs g >= {dtheta / (2 * tau):.4g}, "
            "which grows like 1/sqrt(tau) near |f| = 1 onsets)",
            axis,
            worst,
            dtheta / (2 * tau),
        )


def schedule_dephasing(
    f: Union[Callable, Sequence[float]],
    g: float,
    tau: float,
    n: Optional[int] = None,
    axis: Union[int, str] = "z",
    times: Optional[Sequence[float]] = None,
    max_phase_lag: float = DEFAULT_MAX_PHASE_LAG,
) -> DephasingSchedule:
    """Greedy bit string whose coherence ``cos(2 g tau m(k))`` tracks ``f``.

    ``f`` is a callable of time or an array of samples at the slot
    boundaries. By default the boundaries are ``k tau`` for ``k = 0..n``;
    ``times`` overrides them (e.g. when this axis only owns every third
    slot). Each slot moves the phase by exactly ``2 g tau``. Where the
    target phase steps by at most that much, the tracking error stays
    within ``2 g tau`` (so ``|achieved - target| <= 2 g tau``); faster
    stretches build up lag, and the schedule is rejected with
    :class:`CouplingTooWeak` once the lag beyond one step exceeds
    ``max_phase_lag``.
    """
    if g < 0 or tau <= 0:
        raise ValueError("need g >= 0 and tau > 0")
    ax = axis_index(axis)
    if times is None:
        if n is None:
            raise ValueError("give n or times")
        times = tau * np.arange(n + 1)
    times = np.asarray(times, dtype=float)
    target = np.asarray(f(times) if callable(f) else f, dtype=float)
    if target.shape != times.shape:
        raise ValueError("target samples must match the slot boundaries")
    theta = unwrap_phase(target)
    m = _greedy_m(theta, 2 * g * tau)
    _check_lag(theta, m, g, tau, ax, max_phase_lag)
    bits = tuple(int(b) for b in (np.diff(m) < 0))
    return DephasingSchedule(ax, float(g), float(tau), bits, times, target, theta)


def w0_profile(f: float, fprime: float, g: float, t: Optional[float] = None, tol: float = TOL) -> float:
    """Probability of drawing bit 0 in the continuous description, ``1/2 - f'/(4 g sqrt(1 - f^2))``.

    Values outside ``[0, 1]`` mean the coupling is too weak for this target.
    """
    if abs(fprime) <= tol:
        return 0.5
    root = 1 - f * f
    if root <= tol:
        where = "" if t is None else f" at t = {t}"
        raise StroboscopicLimitError(f"|f| = 1 with f' != 0{where}; w0 diverges")
    return 0.5 - fprime / (4 * g * np.sqrt(root))


def _target_lambdas(target, times: np.ndarray) -> np.ndarray:
    if isinstance(target, Trajectory):
        if times[-1] > target.times[-1] + 1e-12:
            raise ValueError("schedule runs past the end of the target trajectory")
        return np.column_stack(
            [np.interp(times, target.times, target.lambdas[:, i]) for i in range(3)]
        )
    return np.asarray(target.lam(times), dtype=float).reshape(times.size, 3)


def axis_targets(lambdas: np.ndarray, times: np.ndarray, tol: float = 1e-10):
    """Block weights and per-axis coherences ``f_m = 1 - 2 q_m / p_m``.

    ``p`` is proportional to ``sup_t q_m(t)`` (uniform for the identity
    target), which keeps every ``f_m`` in ``[-1, 1]`` whenever the sup
    weights sum to at most 1.
    """
    q = q_matrix_from_lambdas(lambdas)
    bad = np.nonzero(np.any(q < -tol, axis=1))[0]
    if bad.size:
        k = int(bad[0])
        raise NonCPTargetError(
            f"target is not CP at t = {times[k]:.6g} (Pauli weights {np.round(q[k], 6).tolist()})",
            float(times[k]),
        )
    sup = np.clip(q[:, 1:].max(axis=0), 0.0, None)
    total = sup.sum()
    if total > 1 + tol:
        raise ValueError(
            f"sup_t q_1 + sup_t q_2 + sup_t q_3 = {total:.4f} > 1; "
            "no direct-sum weights realise this target"
        )
    p = np.full(3, 1 / 3) if total <= tol else sup / total
    f = np.ones((times.size, 3))
    for m in range(3):
        if p[m] > 0:
            f[:, m] = np.clip(1 - 2 * q[:, 1 + m] / p[m], -1.0, 1.0)
    return p, f


def _round_robin(n: int) -> tuple[int, ...]:
    return tuple(k % 3 for k in range(n))


def _axis_boundaries(slot_axes: Sequence[int], m: int) -> np.ndarray:
    """Indices of the global slot boundaries after each slot of axis ``m`` (with 0)."""
    own = np.nonzero(np.asarray(slot_axes) == m)[0]
    return np.concatenate([[0], own + 1])


def _prepare(target, tau: float, n: int):
    times = tau * np.arange(n + 1)
    lambdas = _target_lambdas(target, times)
    p, f = axis_targets(lambdas, times)
    if np.max(np.abs(lambdas[0] - 1)) > 1e-9:
        raise ValueError("target must start at the identity map")
    return times, lambdas, p, f


def required_coupling(target, tau: float, n: int) -> float:
    """Coupling at which no axis ever lags: ``max |d theta| / (2 tau)`` per own slot.

    This is sufficient, not necessary; near an onset ``f ~ 1 - c t`` the
    phase grows like ``sqrt(t)`` and this bound scales like ``1/sqrt(tau)``.
    """
    times, _, _, f = _prepare(target, tau, n)
    slot_axes = _round_robin(n)
    worst = 0.0
    for m in range(3):
        theta = unwrap_phase(f[_axis_boundaries(slot_axes, m), m])
        if theta.size > 1:
            worst = max(worst, float(np.max(np.abs(np.diff(theta)))))
    return worst / (2 * tau)


def minimal_coupling(
    target, tau: float, n: int, max_phase_lag: float = DEFAULT_MAX_PHASE_LAG, rtol: float = 1e-3
) -> float:
    """Smallest ``g`` (to ``rtol``) whose schedule keeps every excess lag within ``max_phase_lag``.

    Bisection between a failing coupling and :func:`required_coupling`;
    smaller feasible couplings give finer phase quantization. Returns 0
    for a constant target.
    """
    times, _, _, f = _prepare(target, tau, n)
    slot_axes = _round_robin(n)
    thetas = [unwrap_phase(f[_axis_boundaries(slot_axes, m), m]) for m in range(3)]

    def lag(g: float) -> float:
        step = 2 * g * tau
        return max(float(np.max(_excess_lag(th, _greedy_m(th, step), step))) for th in thetas)

    hi = required_coupling(target, tau, n)
    if hi == 0.0:
        # the target never moves; any coupling works
        return 0.0
    if lag(hi) > max_phase_lag:
        raise CouplingTooWeak("no feasible coupling found", 0, 0, hi)
    lo = 0.0
    for _ in range(200):
        if hi - lo <= rtol * hi:
            break
        mid = 0.5 * (lo + hi)
        if mid > 0 and lag(mid) <= max_phase_lag:
            hi = mid
        else:
            lo = mid
    return hi


def schedule_pauli(
    target,
    g: float,
    tau: float,
    n: Optional[int] = None,
    t_max: Optional[float] = None,
    name: Optional[str] = None,
    max_phase_lag: float = DEFAULT_MAX_PHASE_LAG,
) -> PauliSchedule:
    """Compile a CP Pauli trajectory (family or sampled) into a collision schedule.

    The horizon is ``n`` slots or ``t_max`` (rounded up to whole slots).
    Raises :class:`NonCPTargetError` at the first non-CP sample and
    :class:`CouplingTooWeak` if ``g`` cannot keep up with some axis.
    """
    if g < 0 or tau <= 0:
        raise ValueError("need g >= 0 and tau > 0")
    if n is None:
        if t_max is None:
            if not isinstance(target, Trajectory):
                raise ValueError("give n or t_max")
            t_max = float(target.times[-1])
        n = int(np.ceil(t_max / tau - 1e-9))
    if n < 0:
        raise ValueError("n must be non-negative")
    times, lambdas, p, f = _prepare(target, tau, n)
    slot_axes = _round_robin(n)
    schedules = []
    for m in range(3):
        idx = _axis_boundaries(slot_axes, m)
        schedules.append(
            schedule_dephasing(
                f[idx, m], g, tau, axis=m + 1, times=times[idx], max_phase_lag=max_phase_lag
            )
        )
    label = name if name is not None else getattr(target, "name", "")
    return PauliSchedule(
        float(g), float(tau), tuple(map(float, p)), tuple(schedules), slot_axes,
        label, times, lambdas,
    )


def _block_arrays(schedule: PauliSchedule, m: int):
    """Per-slot bits and rotation angles of block ``m`` (idle outside its own slots)."""
    active = np.asarray(schedule.slot_axes) == m
    bits = np.zeros(schedule.n_slots)
    bits[active] = schedule.axes[m].bits
    angles = np.where(active, schedule.g * schedule.tau, 0.0)
    return bits, angles


def _two_branch(bits: np.ndarray) -> np.ndarray:
    return np.vstack([bits, 1 - bits])


def verify_dephasing(schedule: DephasingSchedule) -> Trajectory:
    """Run one axis schedule on its own (one slot per bit)."""
    n = len(schedule.bits)
    bits = np.asarray(schedule.bits, dtype=float)
    return branch_dephasing(
        (0.5, 0.5), _two_branch(bits), schedule.axis + 1,
        np.full(n, schedule.g * schedule.tau), np.full(n, schedule.tau),
    )


def verify_schedule(schedule: PauliSchedule, environment: str = "direct_sum") -> Trajectory:
    """Execute a schedule through the collision simulator.

    ``environment='direct_sum'`` (default) runs the three two-branch blocks
    and mixes them with the schedule weights; this is the construction the
    compiler targets. ``environment='tensor'`` instead puts all three axes'
    particles into one product environment (eight branches) and is kept as
    a diagnostic: interleaved rotations about different axes do not
    commute there, so it generally misses the target. Axes with zero weight
    are idle there. Only the diagonal is returned.
    """
    taus = np.full(schedule.n_slots, schedule.tau)
    if environment == "direct_sum":
        runs = []
        for m in range(3):
            bits, angles = _block_arrays(schedule, m)
            runs.append(branch_dephasing((0.5, 0.5), _two_branch(bits), m + 1, angles, taus))
        return run_block_mixture(schedule.weights, runs)
    if environment == "tensor":
        per_axis = [_block_arrays(schedule, m)[0].astype(int) for m in range(3)]
        slots = [
            ControlledAxis(a + 1, schedule.g, schedule.tau) if schedule.weights[a] > 0 else Idle(schedule.tau)
            for a in schedule.slot_axes
        ]
        branches = []
        for flips in np.ndindex(2, 2, 2):
            bits = tuple(
                int(per_axis[a][k]) ^ flips[a] for k, a in enumerate(schedule.slot_axes)
            )
            branches.append((0.125, bits))
        return run_branch_correlated(branches, slots, len(slots), tol=np.inf)
    raise ValueError(f"unknown environment {environment!r}")


def permute_windows(schedule: PauliSchedule, order: Sequence[int]) -> PauliSchedule:
    """Reorder the slots inside every complete window of ``len(order)`` slots.

    Each axis keeps its own bit sequence; only which global slot it occupies
    changes. A trailing partial window is left alone.
    """
    w = len(order)
    if sorted(order) != list(range(w)):
        raise ValueError("order must be a permutation")
    axes = list(schedule.slot_axes)
    out = []
    full = len(axes) - len(axes) % w
    for start in range(0, full, w):
        window = axes[start : start + w]
        out.extend(window[i] for i in order)
    out.extend(axes[full:])
    return replace(schedule, slot_axes=tuple(out))


def schedule_to_json(schedule: PauliSchedule, include_target: bool = True) -> str:
    """Byte-stable JSON (sorted keys, fixed float formatting by ``json``)."""
    doc = {
        "format": SCHEDULE_FORMAT,
        "g": schedule.g,
        "tau": schedule.tau,
        "n_slots": schedule.n_slots,
        "weights": list(schedule.weights),
        "slot_assignment": "".join(_AXES[a] for a in schedule.slot_axes),
        "axes": {
            _AXES[s.axis]: {
                "bits": "".join(map(str, s.bits)),
                "max_abs_error": s.max_error,
            }
            for s in schedule.axes
        },
        "target": {"name": schedule.target_name},
    }
    if include_target and schedule.target_lambdas is not None:
        doc["target"]["times"] = [float(t) for t in schedule.target_times]
        doc["target"]["lambdas"] = [[float(x) for x in row] for row in schedule.target_lambdas]
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def schedule_from_json(text: str) -> PauliSchedule:
    """Rebuild a schedule; per-axis targets are recomputed from the stored target samples."""
    doc = json.loads(text)
    if doc.get("format") != SCHEDULE_FORMAT:
        raise ValueError(f"unsupported schedule format {doc.get('format')!r}")
    g, tau = float(doc["g"]), float(doc["tau"])
    slot_axes = tuple(_AXES.index(c) for c in doc["slot_assignment"])
    target = doc.get("target", {})
    times = np.asarray(target.get("times", tau * np.arange(len(slot_axes) + 1)), dtype=float)
    lambdas = target.get("lambdas")
    lambdas = None if lambdas is None else np.asarray(lambdas, dtype=float)
    if lambdas is not None:
        _, f = axis_targets(lambdas, times)
    axes = []
    for m in range(3):
        bits = tuple(int(c) for c in doc["axes"][_AXES[m]]["bits"])
        idx = _axis_boundaries(slot_axes, m)
        t_axis = tau * idx.astype(float)
        m_path = np.concatenate([[0], np.cumsum(1 - 2 * np.asarray(bits, dtype=int))])
        tf = f[idx, m] if lambdas is not None else np.cos(2 * g * tau * m_path)
        axes.append(DephasingSchedule(m, g, tau, bits, t_axis, tf, unwrap_phase(tf)))
    return PauliSchedule(
        g, tau, tuple(map(float, doc["weights"])), tuple(axes), slot_axes,
        target.get("name", ""), times if lambdas is not None else None, lambdas,
    )
