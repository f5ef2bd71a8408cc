"""Time-local divisibility of Pauli dynamical maps.

The direction ``kappa = (d/dt) ln lambda`` of a trajectory decides, at each
instant, whether the infinitesimal intermediate map is completely positive,
positive, or merely volume-contracting.
"""
from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import TOL, KappaVector, Trajectory, TripleLike

__all__ = [
    "SingularPointError",
    "Divisibility",
    "DivisibilityClass",
    "Segment",
    "TrajectorySegmentReport",
    "BodyFraction",
    "kappa_analytic",
    "kappa_sampled",
    "classify_point",
    "classify_trajectory",
    "classify_family",
    "is_ultimate_cp_triple",
    "ultimate_cp_permutations",
    "in_markovian_body",
    "mc_body_fraction",
    "SAMPLED_TOL",
]

_PERMUTATIONS = ((1, 2, 3), (1, 3, 2), (2, 3, 1))

# Finite-difference kappa carries rounding of order eps / h, so sampled
# classification needs a looser tolerance than exact kappa.
SAMPLED_TOL = 1e-9


class SingularPointError(ValueError):
    """Some lambda_i vanishes (or changes sign) where kappa is requested."""

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class Divisibility(str, enum.Enum):
    CP_DIVISIBLE = "CPDivisible"
    P_DIVISIBLE_ONLY = "PDivisibleOnly"
    VOLUME_SHRINKING_ONLY = "VolumeShrinkingOnly"
    INDIVISIBLE = "Indivisible"

    @property
    def p_divisible(self) -> bool:
        return self in (Divisibility.CP_DIVISIBLE, Divisibility.P_DIVISIBLE_ONLY)

    @property
    def volume_shrinking(self) -> bool:
        return self is not Divisibility.INDIVISIBLE


@dataclass(frozen=True)
class DivisibilityClass:
    """Classification of a single kappa vector.

    ``cp_slacks`` are ``(-k1+k2+k3, k1-k2+k3, k1+k2-k3)``; CP divisibility
    needs all three to be non-positive.
    """

    label: Divisibility
    cp_slacks: tuple[float, float, float]
    kappa: tuple[float, float, float]
    kappa_sum: float


@dataclass(frozen=True)
class Segment:
    start: float
    end: float
    label: Divisibility


@dataclass(frozen=True)
class TrajectorySegmentReport:
    segments: list[Segment]
    singular_times: list[float]
    sample_labels: list[Optional[Divisibility]] = field(repr=False)
    sample_classes: list[Optional[DivisibilityClass]] = field(repr=False)

    def intervals(self, predicate: Callable[[Divisibility], bool]) -> list[tuple[float, float]]:
        """Merged ``(start, end)`` intervals whose label satisfies ``predicate``."""
        merged: list[list[float]] = []
        for seg in self.segments:
            if not predicate(seg.label):
                continue
            if merged and merged[-1][1] == seg.start:
                merged[-1][1] = seg.end
            else:
                merged.append([seg.start, seg.end])
        return [(a, b) for a, b in merged]

    def to_dict(self) -> dict:
        return {
            "segments": [
                {"start": s.start, "end": s.end, "class": s.label.value} for s in self.segments
            ],
            "singular_times": list(self.singular_times),
        }


def kappa_analytic(
    lam: Callable[[float], TripleLike],
    dlam: Callable[[float], TripleLike],
    t: float,
) -> KappaVector:
    values = np.asarray(lam(t), dtype=float)
    derivs = np.asarray(dlam(t), dtype=float)
    for i, v in enumerate(values):
        if v == 0:
            raise SingularPointError(f"lambda{i + 1}({t}) = 0; kappa undefined", i + 1)
    k = derivs / values
    return KappaVector(*map(float, k))


def kappa_sampled(traj: Trajectory, index: int) -> KappaVector:
    """Finite-difference kappa from a sampled trajectory.

    Interior points use the three-point second-order derivative of
    ``ln|lambda|`` (valid on non-uniform grids). Endpoints fall back to a
    one-sided first-order difference and are flagged ``one_sided``.
    """
    n = len(traj)
    if n < 2:
        raise ValueError("need at least two samples")
    if index < 0:
        index += n
    if not 0 <= index < n:
        raise IndexError(index)
    lo, hi = max(index - 1, 0), min(index + 1, n - 1)
    stencil = traj.lambdas[lo : hi + 1]
    for i in range(3):
        col = stencil[:, i]
        if np.any(col == 0) or not (np.all(col > 0) or np.all(col < 0)):
            raise SingularPointError(
                f"lambda{i + 1} vanishes or changes sign near sample {index}", i + 1
            )
    logs = np.log(np.abs(stencil))
    times = traj.times[lo : hi + 1]
    if lo == index or hi == index:
        k = (logs[-1] - logs[0]) / (times[-1] - times[0])
        return KappaVector(*map(float, k), one_sided=True)
    h0 = times[1] - times[0]
    h1 = times[2] - times[1]
    k = (
        -h1 / (h0 * (h0 + h1)) * logs[0]
        + (h1 - h0) / (h0 * h1) * logs[1]
        + h0 / (h1 * (h0 + h1)) * logs[2]
    )
    return KappaVector(*map(float, k))


def classify_point(k, tol: float = TOL) -> DivisibilityClass:
    kappa = np.asarray(tuple(k), dtype=float)
    if kappa.shape != (3,) or not np.all(np.isfinite(kappa)):
        raise ValueError(f"kappa must be three finite numbers, got {kappa}")
    k1, k2, k3 = kappa
    slacks = (-k1 + k2 + k3, k1 - k2 + k3, k1 + k2 - k3)
    total = k1 + k2 + k3
    if max(slacks) <= tol:
        label = Divisibility.CP_DIVISIBLE
    elif kappa.max() <= tol:
        label = Divisibility.P_DIVISIBLE_ONLY
    elif total <= tol:
        label = Divisibility.VOLUME_SHRINKING_ONLY
    else:
        label = Divisibility.INDIVISIBLE
    return DivisibilityClass(
        label, tuple(map(float, slacks)), tuple(map(float, kappa)), float(total)
    )


def _segments(times: np.ndarray, labels: Sequence[Optional[Divisibility]]) -> list[Segment]:
    # Each labelled sample owns the cell up to the midpoints with differently
    # labelled neighbours; cells end exactly at singular samples.
    segments: list[Segment] = []
    n = len(labels)
    i = 0
    while i < n:
        if labels[i] is None:
            i += 1
            continue
        j = i
        while j + 1 < n and labels[j + 1] == labels[i]:
            j += 1
        if i == 0:
            start = times[0]
        elif labels[i - 1] is None:
            start = times[i - 1]
        else:
            start = 0.5 * (times[i - 1] + times[i])
        if j == n - 1:
            end = times[-1]
        elif labels[j + 1] is None:
            end = times[j + 1]
        else:
            end = 0.5 * (times[j] + times[j + 1])
        segments.append(Segment(float(start), float(end), labels[i]))
        i = j + 1
    return segments


def _report(times, classes: Sequence[Optional[DivisibilityClass]]) -> TrajectorySegmentReport:
    labels = [c.label if c is not None else None for c in classes]
    singular = [float(t) for t, c in zip(times, classes) if c is None]
    return TrajectorySegmentReport(_segments(np.asarray(times), labels), singular, labels, list(classes))


def classify_trajectory(traj: Trajectory, tol: float = SAMPLED_TOL) -> TrajectorySegmentReport:
    """Classify every sample of ``traj`` from finite-difference kappa.

    Samples where some lambda vanishes or changes sign inside the stencil
    are left unlabelled and reported in ``singular_times``.
    """
    if len(traj) < 3:
        raise ValueError("classify_trajectory needs at least three samples")
    classes: list[Optional[DivisibilityClass]] = []
    for i in range(len(traj)):
        try:
            classes.append(classify_point(kappa_sampled(traj, i), tol))
        except SingularPointError:
            classes.append(None)
    return _report(traj.times, classes)


def classify_family(family, times, tol: float = TOL) -> TrajectorySegmentReport:
    """Like :func:`classify_trajectory` but with the family's exact kappa."""
    classes: list[Optional[DivisibilityClass]] = []
    for t in np.asarray(times, dtype=float):
        try:
            classes.append(classify_point(family.kappa(t), tol))
        except SingularPointError:
            classes.append(None)
    return _report(times, classes)


def ultimate_cp_permutations(t: TripleLike, tol: float = 1e-10) -> list[tuple[int, int, int]]:
    lam = np.asarray(t, dtype=float)
    return [
        (i, j, k)
        for i, j, k in _PERMUTATIONS
        if abs(lam[i - 1] * lam[j - 1] - lam[k - 1]) <= tol
    ]


def is_ultimate_cp_triple(t: TripleLike, tol: float = 1e-10) -> Optional[tuple[int, int, int]]:
    """First ``(i, j, k)`` (1-based) with ``lambda_i lambda_j = lambda_k``, else ``None``."""
    matches = ultimate_cp_permutations(t, tol)
    return matches[0] if matches else None


def in_markovian_body(t: TripleLike, tol: float = TOL) -> bool:
    """Whether the channel is reachable by a CP Pauli semigroup.

    With ``lambda = exp(-Gamma t)`` the dissipator rates are non-negative
    exactly when ``lambda_i lambda_j <= lambda_k`` for every permutation.
    """
    lam = np.asarray(t, dtype=float)
    if np.any(lam <= 0) or np.any(lam > 1 + tol):
        return False
    return all(lam[i - 1] * lam[j - 1] <= lam[k - 1] + tol for i, j, k in _PERMUTATIONS)


@dataclass(frozen=True)
class BodyFraction:
    fraction: float
    stderr: float
    n_samples: int
    seed: int


_CHUNK = 1 << 16


def _body_chunk(seed_seq: np.random.SeedSequence) -> tuple[int, np.ndarray]:
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    pts = rng.uniform(-1.0, 1.0, size=(_CHUNK, 3))
    l1, l2, l3 = pts.T
    in_tetra = (1 + l3 >= np.abs(l1 + l2)) & (1 - l3 >= np.abs(l1 - l2))
    inside = pts[in_tetra]
    a, b, c = inside.T
    body = (
        (a > 0) & (b > 0) & (c > 0)
        & (a * b <= c) & (a * c <= b) & (b * c <= a)
    )
    return int(in_tetra.sum()), body


def mc_body_fraction(n_samples: int, seed: int, workers: int = 1) -> BodyFraction:
    """Fraction of the CP tetrahedron reachable by Pauli semigroups.

    Points are drawn uniformly from ``[-1, 1]^3`` and rejected outside the
    tetrahedron until ``n_samples`` tetrahedron points are collected. Each
    fixed-size chunk has its own substream spawned from ``seed``, so the
    result does not depend on ``workers``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    root = np.random.SeedSequence(seed)
    hits: list[np.ndarray] = []
    collected = 0
    spawned = 0
    # the tetrahedron fills a third of the cube
    batch = max(1, int(np.ceil(3.2 * n_samples / _CHUNK)))
    while collected < n_samples:
        seqs = root.spawn(batch)
        spawned += batch
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                results = list(pool.map(_body_chunk, seqs))
        else:
            results = [_body_chunk(s) for s in seqs]
        for count, body in results:
            if collected >= n_samples:
                break
            take = min(count, n_samples - collected)
            hits.append(body[:take])
            collected += take
        batch = max(1, int(np.ceil(3.2 * (n_samples - collected) / _CHUNK)))
    passed = int(sum(h.sum() for h in hits))
    frac = passed / n_samples
    stderr = float(np.sqrt(frac * (1 - frac) / n_samples))
    return BodyFraction(frac, stderr, n_samples, seed)
