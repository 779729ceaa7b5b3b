"""Fixed local disentangling rule.

The selected pair's reduced state is diagonalized by a two-qubit unitary that
sends its eigenvectors, in descending eigenvalue order, onto
|00>, |01>, |10>, |11>. The unitary is then applied to the full register.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .qsim import Statevector, _check_pair, reduced_density_pair, unitarity_deviation

DEGENERACY_GAP = 1e-9


@dataclass(frozen=True)
class DisentanglingGate:
    pair: tuple[int, int]
    unitary: np.ndarray
    eigenvalues_used: tuple[float, float, float, float]

    def to_list(self):
        """Gate as a 4x4 nested list of ``[real, imag]`` pairs."""
        return [[[float(z.real), float(z.imag)] for z in row] for row in self.unitary]


def _align_cluster(vecs):
    # Re-pick an orthonormal basis of span(vecs) hugging the computational
    # basis: project every e_m, keep the largest projection, deflate, repeat.
    remaining = vecs
    chosen = []
    for _ in range(vecs.shape[1]):
        proj = remaining @ remaining.conj().T
        norms = np.linalg.norm(proj, axis=0)
        m = int(np.argmax(norms >= norms.max() - 1e-12))
        v = proj[:, m] / norms[m]
        chosen.append(v)
        q, _ = np.linalg.qr((remaining.conj().T @ v)[:, None], mode="complete")
        remaining = remaining @ q[:, 1:]
    return np.column_stack(chosen)


def _fix_phase(v):
    mags = np.abs(v)
    k = int(np.argmax(mags >= mags.max() - 1e-12))
    return v * (abs(v[k]) / v[k])


def hermitian_eig4(matrix: np.ndarray):
    """Eigenvalues (descending) and eigenvector columns with a fixed gauge.

    Degenerate clusters (gap < 1e-9) get the basis most aligned with the
    computational basis; each vector's largest component is real positive.
    """
    m = np.asarray(matrix, dtype=complex)
    herm = float(np.abs(m - m.conj().T).max())
    if herm > 1e-8:
        raise ValueError(f"matrix is not Hermitian (deviation {herm:.3e})")
    w, v = np.linalg.eigh((m + m.conj().T) / 2.0)
    w, v = w[::-1].copy(), v[:, ::-1].copy()
    start = 0
    n = len(w)
    while start < n:
        stop = start + 1
        while stop < n and w[stop - 1] - w[stop] < DEGENERACY_GAP:
            stop += 1
        if stop - start > 1:
            v[:, start:stop] = _align_cluster(v[:, start:stop])
        start = stop
    for k in range(n):
        v[:, k] = _fix_phase(v[:, k])
    return w, v


def build_disentangling_gate(rho: np.ndarray, pair=(0, 1)) -> DisentanglingGate:
    w, v = hermitian_eig4(rho)
    u = np.ascontiguousarray(v.conj().T)
    return DisentanglingGate(tuple(pair), u, tuple(float(x) for x in w))


def solver_step(amplitudes, num_qubits, i, j, rho):
    """Raw-array variant of :func:`apply_local_solver`; ``rho`` is the pair's current state."""
    gate = build_disentangling_gate(rho, (i, j))
    return kernels.apply_gate_2q(amplitudes, num_qubits, i, j, gate.unitary), gate


def apply_local_solver(state: Statevector, pair):
    L = state.num_qubits
    i, j = _check_pair(pair, L)
    gate = build_disentangling_gate(reduced_density_pair(state, (i, j)), (i, j))
    dev = unitarity_deviation(gate.unitary)
    if dev > 1e-10:
        raise np.linalg.LinAlgError(f"solver produced a non-unitary gate ({dev:.3e})")
    return Statevector(kernels.apply_gate_2q(state.amplitudes, L, i, j, gate.unitary)), gate
