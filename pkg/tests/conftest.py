import hypothesis
import numpy as np
import pytest
import scipy.linalg
from hypothesis import strategies as st

from paulidiv.core import IDENTITY2, PAULIS

hypothesis.settings.register_profile("default", max_examples=60, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=500, deadline=None)
hypothesis.settings.load_profile("default")


# ---------------------------------------------------------------- oracles


def lindblad_superop(rates):
    """Superoperator (column-stacked vec) of ``sum_i r_i (s_i rho s_i - rho)``."""
    L = np.zeros((4, 4), dtype=complex)
    for r, s in zip(rates, PAULIS):
        L += r * (np.kron(s.conj(), s) - np.eye(4))
    return L


def channel_from_superop(S):
    def channel(rho):
        vec = rho.reshape(-1, order="F")
        return (S @ vec).reshape(2, 2, order="F")

    return channel


def triple_from_superop(S):
    """Read ``lambda_j = tr[s_j Phi(s_j)] / 2`` straight off the superoperator."""
    ch = channel_from_superop(S)
    return np.array([0.5 * np.trace(s @ ch(s)).real for s in PAULIS])


def lindblad_triple(rates, t):
    """Triple of ``exp(t L)`` with ``L = sum_i r_i (s_i . s_i - .)``, via scipy expm."""
    return triple_from_superop(scipy.linalg.expm(t * lindblad_superop(rates)))


def _embed_apply(rho, U, k, d, n):
    """Apply ``U`` on (system, particle k) of a ``2 d^n`` density matrix."""
    dims = [2] + [d] * n
    T = rho.reshape(dims + dims)
    G = U.reshape(2, d, 2, d)
    # ket side
    T = np.tensordot(G, T, axes=([2, 3], [0, k + 1]))
    T = np.moveaxis(T, [0, 1], [0, k + 1])
    # bra side
    T = np.tensordot(T, G.conj(), axes=([n + 1, n + 2 + k], [2, 3]))
    T = np.moveaxis(T, [2 * n + 0, 2 * n + 1], [n + 1, n + 2 + k])
    D = 2 * d**n
    return T.reshape(D, D)


def naive_joint_triples(env, unitaries, d):
    """Dense density-matrix dilation: triple after each of the ``n`` collisions.

    ``env`` is the full ``d^n`` environment state; ``unitaries[k]`` acts on
    the system and particle ``k`` (dimension ``2 d``).
    """
    from paulidiv.core import tomography

    n = len(unitaries)
    out = []
    for k in range(1, n + 1):
        def channel(rho, k=k):
            joint = np.kron(rho, env)
            for j in range(k):
                joint = _embed_apply(joint, unitaries[j], j, d, n)
            return joint.reshape(2, d**n, 2, d**n).trace(axis1=1, axis2=3)

        out.append(np.array(tomography(channel)))
    return np.array(out)


def random_density(rng, rank=2):
    a = rng.normal(size=(2, rank)) + 1j * rng.normal(size=(2, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def random_pure(rng):
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def random_cp_triple(rng):
    q = rng.dirichlet(np.ones(4))
    return np.array([q[0] + q[1] - q[2] - q[3], q[0] - q[1] + q[2] - q[3], q[0] - q[1] - q[2] + q[3]])


# ------------------------------------------------------------- strategies

unit = st.floats(0.0, 1.0, allow_nan=False)
rates = st.floats(0.0, 3.0, allow_nan=False)


@st.composite
def simplex4(draw):
    raw = [draw(st.floats(1e-3, 1.0)) for _ in range(4)]
    total = sum(raw)
    return np.array(raw) / total


@st.composite
def cp_triples(draw):
    q = draw(simplex4())
    return np.array([q[0] + q[1] - q[2] - q[3], q[0] - q[1] + q[2] - q[3], q[0] - q[1] - q[2] + q[3]])


@st.composite
def simplex3(draw, lo=0.0):
    raw = [draw(st.floats(max(lo, 1e-3), 1.0)) for _ in range(3)]
    total = sum(raw)
    return tuple(x / total for x in raw)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def maximally_mixed():
    return IDENTITY2 / 2
