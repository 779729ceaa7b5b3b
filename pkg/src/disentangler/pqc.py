"""Layered hardware-efficient circuit used as a latent block.

Encoding R_y(x_q) on every qubit of |0...0>, then per layer R_y(ty) R_z(tz)
on each qubit followed by CZ between neighbours; readout is <Z_q> for each
qubit, computed exactly. Gradients use the parameter-shift rule.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

SHIFT = np.pi / 2


@dataclass(frozen=True)
class CircuitConfig:
    num_qubits: int
    num_layers: int
    entangler: str = "chain"

    def __post_init__(self):
        if not 1 <= self.num_qubits <= 8:
            raise ValueError(f"pqc qubits must be in [1, 8], got {self.num_qubits}")
        if not 1 <= self.num_layers <= 8:
            raise ValueError(f"pqc layers must be in [1, 8], got {self.num_layers}")
        if self.entangler not in ("chain", "ring"):
            raise ValueError(f"entangler must be 'chain' or 'ring', got {self.entangler!r}")

    @property
    def param_shape(self) -> tuple[int, int, int]:
        return (self.num_layers, self.num_qubits, 2)

    @property
    def ring(self) -> bool:
        return self.entangler == "ring"


def count_pqc_parameters(config: CircuitConfig) -> int:
    return 2 * config.num_qubits * config.num_layers


def _check(config, params):
    params = np.asarray(params, dtype=float)
    if params.shape != config.param_shape:
        raise ValueError(f"pqc params shape {params.shape} != {config.param_shape}")
    if not np.all(np.isfinite(params)):
        raise ValueError("pqc params must be finite")
    return params


def pqc_forward_batch(config: CircuitConfig, params, inputs) -> np.ndarray:
    """(batch, n_q) encoding angles -> (batch, n_q) Z expectations."""
    params = _check(config, params)
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    rows = inputs.shape[0]
    w = np.broadcast_to(params, (rows,) + params.shape)
    return kernels.pqc_expectations(inputs, w, config.ring)


def pqc_forward(config: CircuitConfig, params, input_angles) -> np.ndarray:
    return pqc_forward_batch(config, params, np.asarray(input_angles, dtype=float)[None, :])[0]


def pqc_jacobians_batch(config: CircuitConfig, params, inputs):
    """Parameter-shift Jacobians for a batch.

    Returns ``(d_params, d_inputs)`` with shapes (batch, n_q, n_params) and
    (batch, n_q, n_q); ``d_params`` columns follow ``params.reshape(-1)``.
    """
    params = _check(config, params)
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    rows, nq = inputs.shape
    flat = params.reshape(-1)
    npar = flat.size

    shifts = np.concatenate([np.eye(npar), -np.eye(npar)]) * SHIFT
    w = np.repeat(flat[None, :] + shifts, rows, axis=0).reshape((-1,) + params.shape)
    enc = np.tile(inputs, (2 * npar, 1))
    m = kernels.pqc_expectations(enc, w, config.ring).reshape(2 * npar, rows, nq)
    d_params = 0.5 * (m[:npar] - m[npar:]).transpose(1, 2, 0)

    ishift = np.concatenate([np.eye(nq), -np.eye(nq)]) * SHIFT
    enc = (inputs[None, :, :] + ishift[:, None, :]).reshape(-1, nq)
    w = np.broadcast_to(params, (enc.shape[0],) + params.shape)
    m = kernels.pqc_expectations(enc, w, config.ring).reshape(2 * nq, rows, nq)
    d_inputs = 0.5 * (m[:nq] - m[nq:]).transpose(1, 2, 0)
    return d_params, d_inputs


def pqc_gradient(config: CircuitConfig, params, input_angles):
    """Jacobians of m w.r.t. the rotation angles (n_q, layers, n_q, 2) and the inputs (n_q, n_q)."""
    d_params, d_inputs = pqc_jacobians_batch(
        config, params, np.asarray(input_angles, dtype=float)[None, :]
    )
    nq = config.num_qubits
    return d_params[0].reshape((nq,) + config.param_shape), d_inputs[0]
