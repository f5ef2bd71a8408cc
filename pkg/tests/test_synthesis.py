from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import rates
from paulidiv.collision import ControlledAxis, ghz_branches, run_branch_correlated
from paulidiv.core import Trajectory
from paulidiv.families import (
    constant_map,
    dephasing_mixture,
    eternal_family,
    oscillatory_dephasing,
    pauli_semigroup,
    Gamma_from_gamma,
)
from paulidiv.synthesis import (
    SCHEDULE_FORMAT,
    CouplingTooWeak,
    DephasingSchedule,
    NonCPTargetError,
    StroboscopicLimitError,
    axis_targets,
    minimal_coupling,
    permute_windows,
    required_coupling,
    schedule_dephasing,
    schedule_from_json,
    schedule_pauli,
    schedule_to_json,
    unwrap_phase,
    verify_dephasing,
    verify_schedule,
    w0_profile,
)


class TestUnwrap:
    def test_monotone_phase(self):
        t = np.linspace(0, 3, 301)
        assert np.allclose(unwrap_phase(np.cos(2 * t)), 2 * t, atol=1e-7)

    def test_turns_back_at_tangency(self):
        theta = np.concatenate([np.linspace(0, 2, 101), np.linspace(2, 0.5, 76)[1:]])
        assert np.allclose(unwrap_phase(np.cos(theta)), theta, atol=1e-7)

    def test_rejects(self):
        with pytest.raises(ValueError):
            unwrap_phase([1.0, 1.2])
        with pytest.raises(ValueError):
            unwrap_phase([0.5, 0.4])

    @given(st.lists(st.floats(-0.05, 0.05), min_size=2, max_size=60))
    def test_cos_consistent_and_continuous(self, steps):
        theta = np.concatenate([[0.0], np.cumsum(steps)])
        got = unwrap_phase(np.cos(theta))
        assert np.allclose(np.cos(got), np.cos(theta), atol=1e-12)
        assert np.max(np.abs(np.diff(got))) <= 0.1 + 1e-9


class TestScheduleDephasing:
    def test_ghz_target_all_zero_bits(self):
        g, tau = 3.0, 0.01
        s = schedule_dephasing(lambda t: np.cos(2 * g * t), g, tau, 300)
        assert set(s.bits) == {0}
        assert s.max_error <= 1e-9

    def test_constant_target_alternates(self):
        g, tau = 5.0, 0.01
        s = schedule_dephasing(lambda t: np.ones_like(t), g, tau, 8)
        assert s.bits == (0, 1, 0, 1, 0, 1, 0, 1)
        assert set(s.m.tolist()) == {0, 1}
        assert np.all(s.achieved_f >= np.cos(2 * g * tau) - 1e-15)

    def test_exponential_target(self):
        gamma = 1.0
        s = schedule_dephasing(
            lambda t: np.exp(-2 * gamma * t), 10 * np.sqrt(gamma), 1e-3 / gamma, 1000
        )
        assert s.max_error <= 0.02

    def test_error_shrinks_in_stroboscopic_regime(self):
        errs = []
        for tau in (1e-3, 1e-4, 1e-5):
            s = schedule_dephasing(lambda t: np.exp(-2 * t), 1 / np.sqrt(tau), tau, round(1 / tau))
            errs.append(s.max_error)
        assert errs[0] > errs[1] > errs[2]

    @given(st.floats(0.5, 5.0), st.integers(1, 200))
    def test_achieved_is_structural(self, g, n):
        tau = 0.01
        s = schedule_dephasing(lambda t: np.exp(-t), 50.0, tau, n)
        assert np.array_equal(s.achieved_f, np.cos(2 * 50.0 * tau * s.m))
        assert np.all(np.abs(np.diff(s.m)) == 1)

    def test_tracking_bound_when_coupling_keeps_up(self):
        # |d theta| <= 2 g tau everywhere here, so the error stays within 2 g tau
        g, tau = 4.0, 1e-3
        s = schedule_dephasing(lambda t: np.cos(3 * t), g, tau, 2000)
        assert s.max_error <= 2 * g * tau

    def test_coupling_too_weak(self):
        with pytest.raises(CouplingTooWeak) as err:
            schedule_dephasing(lambda t: np.cos(20 * t), 1.0, 1e-2, 100)
        assert err.value.required_g > 1.0
        assert err.value.axis == 2

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            schedule_dephasing(lambda t: 1.5 * np.ones_like(t), 1, 0.1, 3)
        with pytest.raises(ValueError):
            schedule_dephasing(lambda t: np.ones_like(t), 1, 0.0, 3)
        with pytest.raises(ValueError):
            schedule_dephasing(lambda t: np.ones_like(t), 1, 0.1)

    def test_verify_matches_achieved(self):
        s = schedule_dephasing(lambda t: np.exp(-2 * t), 10.0, 1e-3, 500, axis="x")
        traj = verify_dephasing(s)
        assert np.allclose(traj.lambdas[:, 1], s.achieved_f, atol=1e-12)
        assert np.allclose(traj.lambdas[:, 0], 1)

    def test_ghz_equivalent(self):
        g, tau, n = 2.0, 0.01, 200
        s = schedule_dephasing(lambda t: np.cos(2 * g * t), g, tau, n)
        traj = verify_dephasing(s)
        assert np.allclose(traj.lambdas, oscillatory_dephasing(g).lam(traj.times), atol=1e-9)
        ghz = run_branch_correlated(ghz_branches(n), ControlledAxis("z", g, tau), n)
        assert np.allclose(traj.lambdas, ghz.lambdas, atol=1e-12)


class TestW0:
    def test_ghz(self):
        g, t = 1.3, 0.4
        f, fp = np.cos(2 * g * t), -2 * g * np.sin(2 * g * t)
        assert w0_profile(f, fp, g) == pytest.approx(1.0)

    def test_flat(self):
        assert w0_profile(0.3, 0.0, 1.0) == 0.5

    def test_exponential(self):
        gamma, g = 1.0, 50.0
        t = np.log(2) / (2 * gamma)
        expected = 0.5 + gamma / (2 * g * np.sqrt(3))
        assert w0_profile(0.5, -gamma, g, t) == pytest.approx(expected)

    def test_singular(self):
        with pytest.raises(StroboscopicLimitError):
            w0_profile(1.0, -2.0, 1.0, t=0.0)


class TestAxisTargets:
    def test_identity(self):
        p, f = axis_targets(np.ones((4, 3)), np.arange(4.0))
        assert np.allclose(p, 1 / 3) and np.allclose(f, 1)

    def test_z_dephasing(self):
        t = np.linspace(0, 2, 21)
        lam = dephasing_mixture((0, 0, 1), 1.0).lam(t)
        p, f = axis_targets(lam, t)
        assert np.allclose(p, (0, 0, 1))
        assert np.allclose(f[:, :2], 1)
        assert np.allclose(f[:, 2], np.exp(-2 * t))

    def test_non_cp_time(self):
        t = np.linspace(0, 1, 11)
        lam = np.ones((11, 3))
        lam[7:] = (1, -1, 1)
        with pytest.raises(NonCPTargetError) as err:
            axis_targets(lam, t)
        assert err.value.time == pytest.approx(0.7)

    @settings(max_examples=30)
    @given(rates, rates, rates)
    def test_f_in_range_for_semigroups(self, a, b, c):
        t = np.linspace(0, 4, 401)
        lam = pauli_semigroup(Gamma_from_gamma((a, b, c))).lam(t)
        p, f = axis_targets(lam, t)
        assert np.all(np.abs(f) <= 1)
        assert p.sum() == pytest.approx(1)
        # the block mixture reproduces the target exactly
        rebuilt = np.array([p[i] + sum(p[m] * f[:, m] for m in range(3) if m != i) for i in range(3)]).T
        assert np.allclose(rebuilt, lam, atol=1e-10)


class TestSchedulePauli:
    def test_identity_target(self):
        s = schedule_pauli(constant_map((1, 1, 1)), 0.0, 0.01, n=30)
        for ax in s.axes:
            assert np.allclose(ax.target_f, 1)
        assert np.allclose(verify_schedule(s).lambdas, 1)

    def test_z_dephasing_target(self):
        fam = dephasing_mixture((0, 0, 1), 1.0)
        s = schedule_pauli(fam, 50.0, 1e-3, n=300)
        assert s.weights == (0.0, 0.0, 1.0)
        assert np.allclose(s.axes[0].target_f, 1) and np.allclose(s.axes[1].target_f, 1)
        assert np.allclose(s.axes[2].target_f, np.exp(-2 * s.axes[2].times))

    def test_non_cp_target(self):
        with pytest.raises(NonCPTargetError) as err:
            schedule_pauli(constant_map((1.2, 0, 0)), 1.0, 0.1, n=5)
        assert err.value.time == 0.0

    def test_must_start_at_identity(self):
        with pytest.raises(ValueError):
            schedule_pauli(constant_map((0.5, 0.5, 0.5)), 1.0, 0.1, n=5)

    def test_eternal_end_to_end(self):
        fam = eternal_family((1 / 3,) * 3, 1.0, 1.0)
        tau, n = 1e-4, 20_000
        g = 1.5 * minimal_coupling(fam, tau, n, rtol=0.05)
        s = schedule_pauli(fam, g, tau, n)
        traj = verify_schedule(s)
        assert np.max(np.abs(traj.lambdas - fam.lam(traj.times))) <= 0.02

    def test_sampled_target(self):
        fam = dephasing_mixture((0.2, 0.3, 0.5), 1.0)
        target = fam.trajectory(np.linspace(0, 1, 1001))
        s = schedule_pauli(target, 60.0, 1e-4)
        assert s.n_slots == 10_000
        traj = verify_schedule(s)
        assert np.max(np.abs(traj.lambdas - fam.lam(traj.times))) <= 0.02

    def test_partition(self):
        s = schedule_pauli(constant_map((1, 1, 1)), 1.0, 0.1, n=10)
        sets = s.assignment_sets()
        assert frozenset.union(*sets) == frozenset(range(10))
        assert all(not (a & b) for i, a in enumerate(sets) for b in sets[i + 1 :])
        assert [len(x) for x in sets] == [4, 3, 3]

    def test_horizon(self):
        with pytest.raises(ValueError):
            schedule_pauli(constant_map((1, 1, 1)), 1.0, 0.1)
        assert schedule_pauli(constant_map((1, 1, 1)), 1.0, 0.1, t_max=0.95).n_slots == 10

    def test_trajectory_too_short(self):
        target = Trajectory([0, 0.5], np.ones((2, 3)))
        with pytest.raises(ValueError):
            schedule_pauli(target, 1.0, 0.1, n=10)

    def test_minimal_coupling(self):
        fam = dephasing_mixture((0, 0, 1), 1.0)
        tau, n = 1e-3, 600
        g_min = minimal_coupling(fam, tau, n, rtol=1e-3)
        assert g_min <= required_coupling(fam, tau, n)
        schedule_pauli(fam, g_min, tau, n)
        with pytest.raises(CouplingTooWeak):
            schedule_pauli(fam, 0.9 * g_min, tau, n)
        assert minimal_coupling(constant_map((1, 1, 1)), tau, 10) == 0.0


@pytest.fixture(scope="module")
def mixed_schedule():
    fam = dephasing_mixture((0.2, 0.3, 0.5), 1.0)
    return schedule_pauli(fam, 80.0, 1e-3, n=900)


class TestVerify:
    def test_window_permutation(self, mixed_schedule):
        base = verify_schedule(mixed_schedule)
        for order in ((2, 1, 0), (1, 2, 0), (0, 2, 1)):
            other = verify_schedule(permute_windows(mixed_schedule, order))
            assert np.max(np.abs(other.lambdas[::3] - base.lambdas[::3])) <= 1e-12

    def test_permutation_validation(self, mixed_schedule):
        with pytest.raises(ValueError):
            permute_windows(mixed_schedule, (0, 0, 1))

    def test_axis_independence(self, mixed_schedule):
        base = verify_schedule(mixed_schedule)
        m = 1
        zeroed = replace(mixed_schedule.axes[m], bits=(0,) * len(mixed_schedule.axes[m].bits))
        axes = list(mixed_schedule.axes)
        axes[m] = zeroed
        other = verify_schedule(replace(mixed_schedule, axes=tuple(axes)))
        assert np.array_equal(other.lambdas[:, m], base.lambdas[:, m])
        assert not np.allclose(other.lambdas[:, 0], base.lambdas[:, 0])

    def test_tensor_environment_single_axis(self):
        fam = dephasing_mixture((0, 0, 1), 1.0)
        s = schedule_pauli(fam, 60.0, 1e-3, n=300)
        direct = verify_schedule(s)
        tensor = verify_schedule(s, environment="tensor")
        assert np.max(np.abs(direct.lambdas - tensor.lambdas)) <= 1e-12

    def test_tensor_environment_misses_mixed_target(self, mixed_schedule):
        # interleaved rotations about different axes do not commute in a product environment
        direct = verify_schedule(mixed_schedule)
        tensor = verify_schedule(mixed_schedule, environment="tensor")
        assert np.max(np.abs(direct.lambdas - tensor.lambdas)) > 0.05

    def test_unknown_environment(self, mixed_schedule):
        with pytest.raises(ValueError):
            verify_schedule(mixed_schedule, environment="bogus")

    def test_all_zero_phase(self):
        s = schedule_pauli(constant_map((1, 1, 1)), 0.0, 0.1, n=9)
        assert np.allclose(verify_schedule(s).lambdas, 1)


class TestJson:
    def test_roundtrip(self, mixed_schedule):
        text = schedule_to_json(mixed_schedule)
        back = schedule_from_json(text)
        assert back.slot_axes == mixed_schedule.slot_axes
        assert back.weights == mixed_schedule.weights
        for a, b in zip(back.axes, mixed_schedule.axes):
            assert a.bits == b.bits
            assert a.max_error == pytest.approx(b.max_error, abs=1e-12)
        assert np.array_equal(verify_schedule(back).lambdas, verify_schedule(mixed_schedule).lambdas)
        assert schedule_to_json(back) == text

    def test_byte_stable(self):
        fam = dephasing_mixture((0.2, 0.3, 0.5), 1.0)
        a = schedule_to_json(schedule_pauli(fam, 80.0, 1e-3, n=90))
        b = schedule_to_json(schedule_pauli(fam, 80.0, 1e-3, n=90))
        assert a == b
        assert '"format": "%s"' % SCHEDULE_FORMAT in a

    def test_without_target(self, mixed_schedule):
        back = schedule_from_json(schedule_to_json(mixed_schedule, include_target=False))
        assert back.target_lambdas is None
        assert back.axes[2].bits == mixed_schedule.axes[2].bits

    def test_rejects_format(self):
        with pytest.raises(ValueError):
            schedule_from_json('{"format": "other"}')


def test_dephasing_schedule_fields():
    s = schedule_dephasing(lambda t: np.ones_like(t), 1.0, 0.1, 2)
    assert isinstance(s, DephasingSchedule)
    assert s.times.tolist() == pytest.approx([0, 0.1, 0.2])
