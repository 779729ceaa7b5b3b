"""Pure numpy implementation of the hot kernels.

Every function here has a drop-in twin in ``_ckernels.pyx``; the two are
checked against each other in the test suite. Qubit 0 is the most
significant bit of an amplitude index throughout.
"""
from itertools import combinations

import numpy as np


def apply_gate_2q(psi, num_qubits, i, j, gate):
    """Return ``gate`` applied to qubits ``(i, j)`` of ``psi`` (a new array)."""
    t = np.moveaxis(psi.reshape((2,) * num_qubits), (i, j), (0, 1))
    shape = t.shape
    t = (gate @ t.reshape(4, -1)).reshape(shape)
    return np.ascontiguousarray(np.moveaxis(t, (0, 1), (i, j))).reshape(-1)


def pair_rdms(psi, num_qubits):
    """All two-qubit reduced density matrices, pairs in lexicographic order."""
    t = psi.reshape((2,) * num_qubits)
    out = np.empty((num_qubits * (num_qubits - 1) // 2, 4, 4), dtype=complex)
    for k, (i, j) in enumerate(combinations(range(num_qubits), 2)):
        m = np.moveaxis(t, (i, j), (0, 1)).reshape(4, -1)
        out[k] = m @ m.conj().T
    return out


def single_rdms(psi, num_qubits):
    t = psi.reshape((2,) * num_qubits)
    out = np.empty((num_qubits, 2, 2), dtype=complex)
    for q in range(num_qubits):
        m = np.moveaxis(t, q, 0).reshape(2, -1)
        out[q] = m @ m.conj().T
    return out


def _z_signs(num_qubits):
    idx = np.arange(1 << num_qubits)
    bits = (idx[:, None] >> (num_qubits - 1 - np.arange(num_qubits))[None, :]) & 1
    return 1.0 - 2.0 * bits


def _cz_phase(num_qubits, ring):
    bits = (1.0 - _z_signs(num_qubits)) / 2.0
    phase = np.ones(1 << num_qubits)
    pairs = [(q, q + 1) for q in range(num_qubits - 1)]
    if ring and num_qubits > 2:
        pairs.append((num_qubits - 1, 0))
    for a, b in pairs:
        phase *= 1.0 - 2.0 * bits[:, a] * bits[:, b]
    return phase


def _apply_1q_batched(state, q, num_qubits, gates):
    rows = state.shape[0]
    s = state.reshape(rows, 1 << q, 2, 1 << (num_qubits - q - 1))
    return np.einsum("rab,rxby->rxay", gates, s).reshape(rows, -1)


def _ry(theta):
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    g = np.empty(theta.shape + (2, 2), dtype=complex)
    g[..., 0, 0] = c
    g[..., 0, 1] = -s
    g[..., 1, 0] = s
    g[..., 1, 1] = c
    return g


def _ry_rz(theta_y, theta_z):
    # operator product R_y(theta_y) R_z(theta_z): R_z acts first
    c, s = np.cos(theta_y / 2.0), np.sin(theta_y / 2.0)
    em, ep = np.exp(-0.5j * theta_z), np.exp(0.5j * theta_z)
    g = np.empty(theta_y.shape + (2, 2), dtype=complex)
    g[..., 0, 0] = c * em
    g[..., 0, 1] = -s * ep
    g[..., 1, 0] = s * em
    g[..., 1, 1] = c * ep
    return g


def pqc_expectations(enc, weights, ring=False):
    """Batched exact ``<Z_q>`` readout of the layered circuit.

    enc: (rows, n_q) encoding angles; weights: (rows, layers, n_q, 2) with
    last axis (theta_y, theta_z).
    """
    enc = np.asarray(enc, dtype=float)
    weights = np.asarray(weights, dtype=float)
    rows, nq = enc.shape
    layers = weights.shape[1]
    state = np.zeros((rows, 1 << nq), dtype=complex)
    state[:, 0] = 1.0
    for q in range(nq):
        state = _apply_1q_batched(state, q, nq, _ry(enc[:, q]))
    phase = _cz_phase(nq, ring)
    for layer in range(layers):
        for q in range(nq):
            g = _ry_rz(weights[:, layer, q, 0], weights[:, layer, q, 1])
            state = _apply_1q_batched(state, q, nq, g)
        if nq > 1:
            state = state * phase
    probs = state.real**2 + state.imag**2
    return probs @ _z_signs(nq)
