import numpy as np
import pytest

import oracles
from disentangler.entanglement import binary_entropy, concurrence, entanglement_of_formation, spin_flip
from disentangler.qsim import Statevector, reduced_density_pair, reduced_density_single

PHI_PLUS = np.array([1, 0, 0, 1]) / np.sqrt(2)
PSI_MINUS = np.array([0, 1, -1, 0]) / np.sqrt(2)


def werner(p):
    return p * np.outer(PSI_MINUS, PSI_MINUS) + (1 - p) * np.eye(4) / 4


def test_spin_flip_cases():
    np.testing.assert_allclose(spin_flip(np.diag([1, 0, 0, 0])), np.diag([0, 0, 0, 1]), atol=1e-15)
    np.testing.assert_allclose(spin_flip(np.eye(4) / 4), np.eye(4) / 4, atol=1e-15)
    bell = np.outer(PHI_PLUS, PHI_PLUS)
    yy = np.kron(oracles.PAULI_Y, oracles.PAULI_Y)
    np.testing.assert_allclose(spin_flip(bell), yy @ bell.conj() @ yy, atol=1e-15)
    np.testing.assert_allclose(spin_flip(bell), bell, atol=1e-15)


def test_spin_flip_hermitian(rng):
    r = spin_flip(oracles.random_density(rng))
    assert np.abs(r - r.conj().T).max() < 1e-10


def test_product_state_concurrence_zero():
    assert concurrence(np.diag([1.0, 0, 0, 0])).concurrence == 0.0


def test_bell_concurrence_one():
    bell = np.outer(PHI_PLUS, PHI_PLUS)
    rep = concurrence(bell)
    assert rep.concurrence == pytest.approx(oracles.concurrence_direct(bell), abs=1e-7)
    assert rep.concurrence == pytest.approx(1.0, abs=1e-7)
    assert rep.eof == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("p", np.linspace(0, 1, 11))
def test_werner_grid_matches_direct_spectrum(p):
    rho = werner(p)
    direct = oracles.concurrence_direct(rho)
    assert direct == pytest.approx(max(0.0, (3 * p - 1) / 2), abs=1e-7)
    assert concurrence(rho).concurrence == pytest.approx(direct, abs=1e-7)


def test_werner_half():
    assert concurrence(werner(0.5)).concurrence == pytest.approx(0.25, abs=1e-10)


def test_report_invariants(rng):
    for _ in range(50):
        rho = oracles.random_density(rng, rank=int(rng.integers(1, 5)))
        rep = concurrence(rho)
        s = rep.sqrt_eigs
        assert list(s) == sorted(s, reverse=True)
        assert rep.concurrence == pytest.approx(max(0.0, s[0] - s[1] - s[2] - s[3]), abs=1e-10)
        x = (1 + np.sqrt(1 - rep.concurrence**2)) / 2
        assert rep.eof == pytest.approx(binary_entropy(x), abs=1e-10)
        assert rep.concurrence == pytest.approx(oracles.concurrence_direct(rho), abs=1e-6)


@pytest.mark.parametrize("x,expected", [(0.5, 1.0), (1.0, 0.0), (0.0, 0.0), (0.9, 0.468996)])
def test_binary_entropy(x, expected):
    assert binary_entropy(x) == pytest.approx(expected, abs=1e-6)


@pytest.mark.parametrize("x", [-0.01, 1.01])
def test_binary_entropy_domain(x):
    with pytest.raises(ValueError):
        binary_entropy(x)


def test_eof_monotone_in_concurrence(rng):
    reps = [concurrence(oracles.random_density(rng, rank=int(rng.integers(1, 3)))) for _ in range(200)]
    reps.sort(key=lambda r: r.concurrence)
    eofs = [r.eof for r in reps]
    assert all(b >= a - 1e-12 for a, b in zip(eofs, eofs[1:]))
    cs = np.linspace(0, 1, 101)
    assert np.all(np.diff([entanglement_of_formation(c) for c in cs]) >= 0)


def test_local_unitary_invariance(rng):
    for _ in range(20):
        rho = oracles.random_density(rng, rank=2)
        u = np.kron(oracles.random_unitary(rng, 2), oracles.random_unitary(rng, 2))
        c0 = concurrence(rho).concurrence
        c1 = concurrence(u @ rho @ u.conj().T).concurrence
        assert c1 == pytest.approx(c0, abs=1e-9)


def test_pure_state_cross_check(rng):
    for _ in range(50):
        s = Statevector(oracles.random_state(rng, 2))
        rho = reduced_density_pair(s, (0, 1))
        r1 = reduced_density_single(s, 0)
        c = concurrence(rho).concurrence
        assert c**2 == pytest.approx(2 * (1 - np.trace(r1 @ r1).real), abs=1e-9)


def test_diagonal_mixture_is_separable(rng):
    for _ in range(20):
        p = rng.dirichlet(np.ones(4))
        assert concurrence(np.diag(p)).concurrence < 1e-12


@pytest.mark.parametrize("rank", [1, 2, 3, 4])
def test_concurrence_rank_deficient_matches_tau_oracle(rng, rank):
    for _ in range(50):
        rho = oracles.random_density(rng, 4, rank)
        assert abs(concurrence(rho).concurrence - oracles.concurrence_tau(rho)) < 1e-10
