import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import lindblad_triple, rates, simplex3
from paulidiv.divisibility import is_ultimate_cp_triple, kappa_analytic
from paulidiv.families import (
    FAMILIES,
    Gamma_from_gamma,
    MixtureWeights,
    SemigroupRates,
    constant_map,
    dephasing_mixture,
    eternal_constituents,
    eternal_family,
    gamma_from_Gamma,
    oscillatory_dephasing,
    oscillatory_depolarizing,
    pauli_semigroup,
    ultimate_semigroup,
    volume_example,
)

ALL = [
    pauli_semigroup((1, 2, 3)),
    ultimate_semigroup(0.7, 1.3, ("x", "z")),
    dephasing_mixture((0.2, 0.3, 0.5), 1.0),
    eternal_family((0.3, 0.3, 0.4), 1.0, 1.0),
    eternal_family((0.2, 0.5, 0.3), 0.5, 2.0, (3, 1)),
    oscillatory_dephasing(1.0),
    oscillatory_depolarizing(0.8),
    volume_example(),
    constant_map((1, 1, 1)),
]
IDS = [f.name for f in ALL]


class TestRates:
    @pytest.mark.parametrize(
        "G, g", [((1, 1, 2), (1, 1, 0)), ((0, 0, 0), (0, 0, 0)), ((2, 1, 1), (0, 1, 1))]
    )
    def test_examples(self, G, g):
        assert gamma_from_Gamma(G) == pytest.approx(g)
        assert Gamma_from_gamma(g) == pytest.approx(G)

    @given(rates, rates, rates)
    def test_roundtrip(self, a, b, c):
        assert Gamma_from_gamma(gamma_from_Gamma((a, b, c))) == pytest.approx((a, b, c), abs=1e-12)

    def test_cp_flag(self):
        assert SemigroupRates((1, 1, 2)).cp_generating
        assert not SemigroupRates((3, 1, 1)).cp_generating
        assert not pauli_semigroup((3, 1, 1)).claims_cp

    def test_weights(self):
        with pytest.raises(ValueError):
            MixtureWeights(0.5, 0.6, 0.0)
        with pytest.raises(ValueError):
            MixtureWeights(-0.1, 0.6, 0.5)


@pytest.mark.parametrize("fam", ALL, ids=IDS)
def test_identity_at_zero(fam):
    assert np.max(np.abs(np.array(fam(0.0)) - 1)) <= 1e-12


@pytest.mark.parametrize("fam", ALL, ids=IDS)
def test_cp_on_dense_grid(fam):
    if fam.claims_cp:
        assert fam.stays_cp(np.linspace(0, 5, 2001))


@pytest.mark.parametrize("fam", ALL, ids=IDS)
def test_derivative_matches_finite_differences(fam):
    t = np.linspace(0.05, 2.0, 40)
    errs = []
    for h in (1e-3, 5e-4):
        fd = (fam.lam(t + h) - fam.lam(t - h)) / (2 * h)
        errs.append(np.max(np.abs(fd - fam.dlam(t))))
    # second-order: halving h quarters the error (or both are at rounding level)
    assert errs[1] <= max(errs[0] / 3, 1e-8)


@pytest.mark.parametrize("fam", ALL, ids=IDS)
def test_vectorised_matches_scalar(fam):
    times = np.array([0.0, 0.3, 1.7])
    traj = fam.trajectory(times)
    for i, t in enumerate(times):
        assert traj.lambdas[i] == pytest.approx(tuple(fam(t)))


class TestSemigroups:
    def test_example(self):
        assert tuple(pauli_semigroup((1, 2, 3))(1.0)) == pytest.approx(np.exp([-1, -2, -3]))

    @pytest.mark.parametrize("t", [0.0, 0.4, 3.0])
    def test_ultimate_triple(self, t):
        assert is_ultimate_cp_triple(pauli_semigroup((1, 1, 2))(t)) is not None

    @given(rates, rates, rates, st.floats(0, 3))
    def test_matches_lindblad_oracle(self, a, b, c, t):
        # dissipator rates enter the generator with a factor one half
        G = Gamma_from_gamma((a, b, c))
        assert np.allclose(pauli_semigroup(G)(t), lindblad_triple((a / 2, b / 2, c / 2), t), atol=1e-10)

    def test_amplitude_damping_like(self):
        fam = ultimate_semigroup(1.0, 1.0)
        assert tuple(fam(0.5)) == pytest.approx((np.exp(-0.5), np.exp(-0.5), np.exp(-1.0)))

    def test_pure_dephasing(self):
        lam = ultimate_semigroup(2.0, 0.0)(0.3)
        assert lam[0] == 1.0
        assert lam[1] == pytest.approx(np.exp(-0.6)) and lam[2] == pytest.approx(lam[1])

    @given(rates, rates, st.sampled_from([("x", "y"), ("y", "z"), ("z", "x"), (2, 1)]))
    def test_ultimate_identity(self, gi, gj, axes):
        fam = ultimate_semigroup(gi, gj, axes)
        lam = fam.lam(np.linspace(0, 10, 201))
        i, j = (a - 1 if isinstance(a, int) else "xyz".index(a) for a in axes)
        (k,) = {0, 1, 2} - {i, j}
        assert np.max(np.abs(lam[:, i] * lam[:, j] - lam[:, k])) <= 1e-12

    def test_ultimate_matches_dissipator(self):
        # gi/2 on x and gj/2 on y
        fam = ultimate_semigroup(0.8, 1.4)
        assert np.allclose(fam(0.9), lindblad_triple((0.4, 0.7, 0.0), 0.9), atol=1e-12)

    def test_rejects_negative_rate(self):
        with pytest.raises(ValueError):
            ultimate_semigroup(-1.0, 1.0)
        with pytest.raises(ValueError):
            ultimate_semigroup(1.0, 1.0, ("x", "x"))


class TestMixtures:
    @given(simplex3(), st.floats(0.1, 3.0), st.floats(0.0, 3.0))
    def test_dephasing_mixture_against_expm(self, p, gamma, t):
        expected = sum(
            w * lindblad_triple(np.eye(3)[m] * gamma, t) for m, w in enumerate(p)
        )
        assert np.allclose(dephasing_mixture(p, gamma)(t), expected, atol=1e-12)

    def test_degenerate_is_pure_dephasing(self):
        lam = dephasing_mixture((1, 0, 0), 1.0)(0.7)
        assert tuple(lam) == pytest.approx((1.0, np.exp(-1.4), np.exp(-1.4)))

    def test_long_time_limit(self):
        assert tuple(dephasing_mixture((1 / 3,) * 3, 1.0)(60.0)) == pytest.approx((1 / 3,) * 3)

    @given(simplex3(), st.floats(0.1, 3.0), st.floats(0.1, 3.0), st.floats(0.0, 5.0))
    def test_eternal_is_convex_combination(self, p, gi, gj, t):
        fam = eternal_family(p, gi, gj, ("y", "z"))
        parts = eternal_constituents(p, gi, gj, ("y", "z"))
        expected = sum(w * np.array(c(t)) for w, c in zip(p, parts))
        assert np.max(np.abs(np.array(fam(t)) - expected)) <= 1e-12

    def test_eternal_reduces_to_dephasing_mixture(self):
        # p1 = 0: mixture of an x- and a y-dephasing
        fam = eternal_family((0, 0.5, 0.5), 1.0, 1.0)
        # x-dephasing at rate 1 keeps lambda_x; here generated by gi/2 = 1/2
        mix = dephasing_mixture((0.5, 0.5, 0.0), 0.5)
        assert np.allclose(fam.lam(np.linspace(0, 3, 31)), mix.lam(np.linspace(0, 3, 31)))

    def test_eternal_kappa_at_zero(self):
        p1, p2, p3, gi, gj = 0.2, 0.3, 0.5, 0.7, 1.9
        k = eternal_family((p1, p2, p3), gi, gj).kappa(0.0)
        ki, kj = -gj * (p1 + p3), -gi * (p1 + p2)
        assert tuple(k) == pytest.approx((ki, kj, ki + kj), abs=1e-14)

    @given(simplex3(lo=0.01), st.floats(0.1, 3.0), st.floats(0.1, 3.0), st.floats(0.01, 5.0))
    def test_eternal_kappa_matches_derivative(self, p, gi, gj, t):
        fam = eternal_family(p, gi, gj)
        direct = kappa_analytic(fam, fam.derivative, t)
        assert np.allclose(tuple(fam.kappa(t)), tuple(direct), atol=1e-10)

    @given(simplex3(lo=0.01), st.floats(0.1, 3.0), st.floats(0.1, 3.0), st.floats(0.01, 10.0))
    def test_eternal_slack_positive(self, p, gi, gj, t):
        k = eternal_family(p, gi, gj).kappa(t)
        assert k.kappa1 + k.kappa2 - k.kappa3 > 0


class TestOscillatory:
    def test_dephasing_points(self):
        fam = oscillatory_dephasing(1.0)
        assert np.allclose(fam(np.pi / 4), (0, 0, 1), atol=1e-15)
        assert np.allclose(fam(np.pi / 2), (-1, -1, 1))

    def test_dephasing_axis(self):
        assert np.allclose(oscillatory_dephasing(1.0, "x")(np.pi / 4), (1, 0, 0), atol=1e-15)

    @given(st.floats(0.1, 3.0), st.floats(0, 5))
    def test_depolarizing_is_equal_mixture(self, g, t):
        mix = sum(np.array(oscillatory_dephasing(g, m)(t)) for m in "xyz") / 3
        assert np.allclose(oscillatory_depolarizing(g)(t), mix, atol=1e-14)

    def test_depolarizing_points(self):
        fam = oscillatory_depolarizing(1.0)
        assert np.allclose(fam(np.pi / 2), (-1 / 3,) * 3)
        assert np.allclose(fam(np.pi), (1, 1, 1))

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            oscillatory_dephasing(0.0)
        with pytest.raises(ValueError):
            oscillatory_depolarizing(-1.0)


class TestVolumeExample:
    def test_volume_strictly_decreasing(self):
        lam = volume_example().lam(np.arange(0, 1 + 5e-5, 1e-4))
        assert np.all(np.diff(np.abs(np.prod(lam, axis=1))) < 0)

    def test_components_not_monotone(self):
        lam = volume_example().lam(np.arange(0, 1 + 5e-5, 1e-4))
        for col in (0, 1):
            d = np.diff(lam[:, col])
            assert np.any(d > 0) and np.any(d < 0)


def test_constant_map():
    fam = constant_map((0.5, 0.2, 0.1))
    assert tuple(fam(3.0)) == (0.5, 0.2, 0.1)
    assert fam.claims_cp
    assert not constant_map((1.2, 0, 0)).claims_cp
    with pytest.raises(ValueError):
        constant_map((1, 1))


def test_registry():
    assert set(FAMILIES) >= {"semigroup", "eternal", "volume_example", "dephasing_mixture"}
