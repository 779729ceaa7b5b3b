"""Wootters concurrence and entanglement of formation for two qubits."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SIGMA_Y = np.array([[0, -1j], [1j, 0]])
SIGMA_YY = np.kron(SIGMA_Y, SIGMA_Y)
NU_FLOOR = 1e-13


@dataclass(frozen=True)
class ConcurrenceReport:
    concurrence: float
    sqrt_eigs: tuple[float, float, float, float]
    eof: float


def spin_flip(rho: np.ndarray) -> np.ndarray:
    """(sy x sy) rho* (sy x sy)."""
    rho = np.asarray(rho, dtype=complex)
    return SIGMA_YY @ rho.conj() @ SIGMA_YY


def _psd_sqrt(rho):
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2.0)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def binary_entropy(x: float) -> float:
    if x < -1e-12 or x > 1.0 + 1e-12:
        raise ValueError(f"binary entropy argument {x!r} outside [0, 1]")
    x = min(max(float(x), 0.0), 1.0)
    if x == 0.0 or x == 1.0:
        return 0.0
    return float(-x * np.log2(x) - (1.0 - x) * np.log2(1.0 - x))


def entanglement_of_formation(c: float) -> float:
    c = min(max(float(c), 0.0), 1.0)
    return binary_entropy((1.0 + np.sqrt(1.0 - c * c)) / 2.0)


def concurrence(rho: np.ndarray) -> ConcurrenceReport:
    """Concurrence from the spectrum of rho * spin_flip(rho).

    The spectrum is taken from the Hermitian similar matrix
    sqrt(rho) rho~ sqrt(rho), which has the same eigenvalues.
    """
    rho = np.asarray(rho, dtype=complex)
    root = _psd_sqrt(rho)
    m = root @ spin_flip(rho) @ root
    nu = np.linalg.eigvalsh((m + m.conj().T) / 2.0)
    # eigen-solve noise (~1e-16) would become ~1e-8 after the square root
    nu[nu < NU_FLOOR] = 0.0
    s = np.sqrt(nu)[::-1]
    c = max(0.0, float(s[0] - s[1] - s[2] - s[3]))
    c = min(c, 1.0)
    return ConcurrenceReport(c, tuple(float(v) for v in s), entanglement_of_formation(c))
