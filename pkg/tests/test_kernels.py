import numpy as np
import pytest

import oracles
from disentangler import _pykernels, kernels

BACKENDS = [_pykernels]
try:
    from disentangler import _ckernels

    BACKENDS.append(_ckernels)
except ImportError:  # extension not built
    pass


@pytest.fixture(params=BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def backend(request):
    return request.param


def test_selected_backend_is_known():
    assert kernels.BACKEND in ("cython", "python")


@pytest.mark.parametrize("L,pair", [(2, (0, 1)), (3, (0, 2)), (4, (1, 3)), (6, (2, 5))])
def test_apply_gate_matches_embedding(backend, rng, L, pair):
    psi = oracles.random_state(rng, L)
    u = oracles.random_unitary(rng, 4)
    out = backend.apply_gate_2q(psi, L, *pair, u)
    np.testing.assert_allclose(out, oracles.embed_two_qubit(u, pair, L) @ psi, atol=1e-12)


@pytest.mark.parametrize("L", [2, 3, 4])
def test_pair_rdms_match_full_trace(backend, rng, L):
    psi = oracles.random_state(rng, L)
    rhos = backend.pair_rdms(psi, L)
    k = 0
    for i in range(L):
        for j in range(i + 1, L):
            np.testing.assert_allclose(rhos[k], oracles.partial_trace(psi, [i, j], L), atol=1e-12)
            k += 1


def test_single_rdms_match_full_trace(backend, rng):
    psi = oracles.random_state(rng, 4)
    rhos = backend.single_rdms(psi, 4)
    for q in range(4):
        np.testing.assert_allclose(rhos[q], oracles.partial_trace(psi, [q], 4), atol=1e-12)


@pytest.mark.parametrize("ring", [False, True])
def test_pqc_expectations_match_dense(backend, rng, ring):
    enc = rng.uniform(-np.pi, np.pi, size=(3, 3))
    w = rng.uniform(-np.pi, np.pi, size=(3, 2, 3, 2))
    out = backend.pqc_expectations(enc, w, ring)
    for r in range(3):
        np.testing.assert_allclose(out[r], oracles.pqc_dense(enc[r], w[r], ring), atol=1e-10)


def test_backends_agree(rng):
    if len(BACKENDS) < 2:
        pytest.skip("compiled kernels not built")
    py, cy = BACKENDS
    psi = oracles.random_state(rng, 6)
    u = oracles.random_unitary(rng, 4)
    np.testing.assert_allclose(py.apply_gate_2q(psi, 6, 1, 4, u), cy.apply_gate_2q(psi, 6, 1, 4, u), atol=1e-14)
    np.testing.assert_allclose(py.pair_rdms(psi, 6), cy.pair_rdms(psi, 6), atol=1e-14)
    enc, w = rng.normal(size=(5, 4)), rng.normal(size=(5, 3, 4, 2))
    np.testing.assert_allclose(py.pqc_expectations(enc, w), cy.pqc_expectations(enc, w), atol=1e-13)
