import numpy as np
import pytest

import oracles
from disentangler.pqc import (
    CircuitConfig,
    count_pqc_parameters,
    pqc_forward,
    pqc_forward_batch,
    pqc_gradient,
    pqc_jacobians_batch,
)


def test_zero_angles_give_all_ones():
    cfg = CircuitConfig(4, 3)
    np.testing.assert_allclose(pqc_forward(cfg, np.zeros(cfg.param_shape), np.zeros(4)), np.ones(4), atol=1e-15)


def test_single_qubit_flip():
    cfg = CircuitConfig(1, 1)
    assert pqc_forward(cfg, np.zeros(cfg.param_shape), [np.pi])[0] == pytest.approx(-1.0, abs=1e-15)


@pytest.mark.parametrize("entangler", ["chain", "ring"])
def test_matches_dense_oracle(rng, entangler):
    cfg = CircuitConfig(3, 2, entangler)
    for _ in range(5):
        w = rng.uniform(-np.pi, np.pi, cfg.param_shape)
        x = rng.uniform(-np.pi, np.pi, 3)
        np.testing.assert_allclose(pqc_forward(cfg, w, x), oracles.pqc_dense(x, w, entangler == "ring"), atol=1e-10)


def test_single_qubit_closed_form_via_dense(rng):
    # one qubit: <Z> after R_y(ty) R_z(tz) R_y(x)|0>; checked against the dense oracle
    cfg = CircuitConfig(1, 1)
    for _ in range(5):
        w = rng.uniform(-np.pi, np.pi, cfg.param_shape)
        x = rng.uniform(-np.pi, np.pi, 1)
        assert pqc_forward(cfg, w, x)[0] == pytest.approx(oracles.pqc_dense(x, w)[0], abs=1e-12)


def test_gradient_trivial_cases():
    cfg = CircuitConfig(1, 1)
    zero = np.zeros(cfg.param_shape)
    _, d_in = pqc_gradient(cfg, zero, [0.0])
    assert d_in[0, 0] == pytest.approx(0.0, abs=1e-15)
    _, d_in = pqc_gradient(cfg, zero, [np.pi / 2])
    assert d_in[0, 0] == pytest.approx(-1.0, abs=1e-12)


@pytest.mark.parametrize("nq,layers", [(1, 1), (2, 2), (3, 2), (4, 3)])
def test_shift_rule_matches_finite_differences(rng, nq, layers):
    cfg = CircuitConfig(nq, layers)
    w = rng.uniform(-np.pi, np.pi, cfg.param_shape)
    x = rng.uniform(-np.pi, np.pi, nq)
    d_w, d_x = pqc_gradient(cfg, w, x)
    fd_w = oracles.central_diff(lambda ww: pqc_forward(cfg, ww, x), w)  # shape param_shape + (nq,)
    fd_x = oracles.central_diff(lambda xx: pqc_forward(cfg, w, xx), x)
    np.testing.assert_allclose(np.moveaxis(fd_w, -1, 0), d_w, atol=1e-5)
    np.testing.assert_allclose(fd_x.T, d_x, atol=1e-5)


def test_batch_jacobians_match_single(rng):
    cfg = CircuitConfig(3, 2)
    w = rng.normal(size=cfg.param_shape)
    xs = rng.normal(size=(4, 3))
    jw, jx = pqc_jacobians_batch(cfg, w, xs)
    for b in range(4):
        dw, dx = pqc_gradient(cfg, w, xs[b])
        np.testing.assert_allclose(jw[b], dw.reshape(3, -1), atol=1e-14)
        np.testing.assert_allclose(jx[b], dx, atol=1e-14)


def test_output_bounds_and_determinism(rng):
    cfg = CircuitConfig(5, 4)
    w = rng.normal(size=cfg.param_shape) * 3
    xs = rng.normal(size=(50, 5)) * 3
    m = pqc_forward_batch(cfg, w, xs)
    assert np.all(np.abs(m) <= 1 + 1e-12)
    assert np.array_equal(m, pqc_forward_batch(cfg, w, xs))


@pytest.mark.parametrize("nq,layers,expected", [(4, 3, 24), (5, 3, 30), (2, 3, 12)])
def test_parameter_count(nq, layers, expected):
    assert count_pqc_parameters(CircuitConfig(nq, layers)) == expected


def test_config_validation():
    for bad in [(0, 1), (9, 1), (2, 0)]:
        with pytest.raises(ValueError):
            CircuitConfig(*bad)
    with pytest.raises(ValueError):
        CircuitConfig(2, 2, "star")
    with pytest.raises(ValueError):
        pqc_forward(CircuitConfig(2, 2), np.zeros((2, 2)), [0, 0])
