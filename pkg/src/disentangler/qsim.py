"""Dense statevector simulation for small registers.

Qubit 0 is the most significant bit of an amplitude index, and a pair
matrix for qubits ``(i, j)`` is indexed by ``2 * bit_i + bit_j``.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import kernels

MAX_QUBITS = 8
EIG_FLOOR = 1e-12


@dataclass(frozen=True)
class Statevector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.ascontiguousarray(self.amplitudes, dtype=complex).reshape(-1)
        n = amps.size
        if n < 2 or n & (n - 1):
            raise ValueError(f"amplitude count {n} is not a power of two >= 2")
        if n > 1 << MAX_QUBITS:
            raise ValueError(f"at most {MAX_QUBITS} qubits are supported")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > 1e-8:
            raise ValueError(f"state is not normalized (|psi|^2 = {norm:.12g})")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def num_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    def to_json(self) -> str:
        return json.dumps(
            {
                "num_qubits": self.num_qubits,
                "amplitudes": [[float(a.real), float(a.imag)] for a in self.amplitudes],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "Statevector":
        data = json.loads(text)
        amps = np.array([complex(re_, im) for re_, im in data["amplitudes"]])
        state = cls(amps)
        if state.num_qubits != data["num_qubits"]:
            raise ValueError("num_qubits does not match amplitude count")
        return state


class PatternError(ValueError):
    """Malformed entanglement-pattern label."""

    def __init__(self, label, position, message):
        super().__init__(f"{message} at position {position} in {label!r}")
        self.label = label
        self.position = position


@dataclass(frozen=True)
class EntanglementPattern:
    """Block structure of an initial state; ``blocks`` are consecutive qubit groups."""

    blocks: tuple[int, ...]

    def __post_init__(self):
        blocks = tuple(int(b) for b in self.blocks)
        if not blocks or any(b < 1 for b in blocks):
            raise ValueError(f"invalid block sizes {self.blocks!r}")
        object.__setattr__(self, "blocks", blocks)

    @property
    def num_qubits(self) -> int:
        return sum(self.blocks)

    @property
    def label(self) -> str:
        return "-".join("R" * b for b in self.blocks)

    def __str__(self):
        return self.label


_PATTERN_RE = re.compile(r"R+(-R+)*")


def parse_pattern(label: str) -> EntanglementPattern:
    """Parse labels such as ``"RR-RR-RR"`` into block sizes ``(2, 2, 2)``."""
    if not label:
        raise PatternError(label, 0, "empty label")
    if _PATTERN_RE.fullmatch(label) is None:
        prev = "-"
        for pos, ch in enumerate(label):
            if ch not in "R-":
                raise PatternError(label, pos, f"unexpected character {ch!r}")
            if ch == "-" and prev == "-":
                raise PatternError(label, pos, "hyphen must follow an R block")
            prev = ch
        raise PatternError(label, len(label) - 1, "label must end with R")
    return EntanglementPattern(tuple(len(run) for run in label.split("-")))


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _haar_amplitudes(num_qubits, rng):
    dim = 1 << num_qubits
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def haar_random_state(num_qubits: int, seed=None) -> Statevector:
    """Haar-uniform pure state: normalized standard complex Gaussian vector.

    ``seed`` may be an int, None, or a ``numpy.random.Generator`` (which is
    advanced in place).
    """
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise ValueError(f"num_qubits must be in [1, {MAX_QUBITS}], got {num_qubits}")
    return Statevector(_haar_amplitudes(num_qubits, _rng(seed)))


def sample_pattern_state(pattern: EntanglementPattern, seed=None) -> Statevector:
    if pattern.num_qubits > MAX_QUBITS:
        raise ValueError(f"pattern {pattern.label} exceeds {MAX_QUBITS} qubits")
    rng = _rng(seed)
    amps = np.ones(1, dtype=complex)
    for block in pattern.blocks:
        amps = np.kron(amps, _haar_amplitudes(block, rng))
    return Statevector(amps / np.linalg.norm(amps))


def qubit_pairs(num_qubits: int) -> list[tuple[int, int]]:
    return list(combinations(range(num_qubits), 2))


def _check_pair(pair, num_qubits):
    i, j = pair
    if not 0 <= i < j < num_qubits:
        raise ValueError(f"pair {pair!r} invalid for {num_qubits} qubits (need i < j < L)")
    return int(i), int(j)


def unitarity_deviation(gate: np.ndarray) -> float:
    gate = np.asarray(gate)
    return float(np.abs(gate.conj().T @ gate - np.eye(gate.shape[0])).max())


def apply_two_qubit_gate(state: Statevector, pair, gate) -> Statevector:
    gate = np.ascontiguousarray(gate, dtype=complex)
    if gate.shape != (4, 4):
        raise ValueError(f"gate must be 4x4, got {gate.shape}")
    dev = unitarity_deviation(gate)
    if dev > 1e-10:
        raise ValueError(f"gate is not unitary (max |U^dag U - I| = {dev:.3e})")
    L = state.num_qubits
    i, j = _check_pair(pair, L)
    return Statevector(kernels.apply_gate_2q(state.amplitudes, L, i, j, gate))


def reduced_density_pair(state: Statevector, pair) -> np.ndarray:
    """4x4 reduced state of ``pair``, all other qubits traced out."""
    L = state.num_qubits
    i, j = _check_pair(pair, L)
    t = np.moveaxis(state.amplitudes.reshape((2,) * L), (i, j), (0, 1)).reshape(4, -1)
    return t @ t.conj().T


def all_pair_densities(state: Statevector) -> np.ndarray:
    """Stack of all pair reduced states, pairs in lexicographic order."""
    return kernels.pair_rdms(state.amplitudes, state.num_qubits)


def reduced_density_single(state: Statevector, qubit: int) -> np.ndarray:
    L = state.num_qubits
    if not 0 <= qubit < L:
        raise ValueError(f"qubit {qubit} out of range for {L} qubits")
    t = np.moveaxis(state.amplitudes.reshape((2,) * L), qubit, 0).reshape(2, -1)
    return t @ t.conj().T


def _entropy_from_eigs(eigs, dim):
    eigs = eigs[eigs >= EIG_FLOOR]
    # the dropped mass is rounding noise; renormalising keeps a pure marginal at exactly 0
    eigs = eigs / eigs.sum()
    s = float(-(eigs * np.log2(eigs)).sum())
    return min(max(s, 0.0), float(np.log2(dim)))


def von_neumann_entropy(rho) -> float:
    """Entropy in bits; eigenvalues below 1e-12 contribute nothing."""
    rho = np.asarray(rho, dtype=complex)
    dim = rho.shape[0]
    if rho.shape != (dim, dim):
        raise ValueError(f"density matrix must be square, got {rho.shape}")
    herm = float(np.abs(rho - rho.conj().T).max())
    if herm > 1e-8:
        raise ValueError(f"density matrix is not Hermitian (deviation {herm:.3e})")
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > 1e-8:
        raise ValueError(f"density matrix trace is {tr.real:.12g}, expected 1")
    eigs = np.linalg.eigvalsh(rho)
    if eigs[0] < -1e-8:
        raise ValueError(f"density matrix has negative eigenvalue {eigs[0]:.3e}")
    return _entropy_from_eigs(eigs, dim)


def single_qubit_entropies(amplitudes: np.ndarray, num_qubits: int) -> np.ndarray:
    """Entropy of every single-qubit marginal, straight from raw amplitudes."""
    rhos = kernels.single_rdms(amplitudes, num_qubits)
    # closed-form 2x2 spectrum: (tr +- sqrt((a - d)^2 + 4|b|^2)) / 2
    a, d, b = rhos[:, 0, 0].real, rhos[:, 1, 1].real, rhos[:, 0, 1]
    tr = a + d
    gap = np.sqrt((a - d) ** 2 + 4.0 * (b.real**2 + b.imag**2))
    eigs = np.stack([(tr - gap) / 2.0, (tr + gap) / 2.0], axis=1)
    return np.array([_entropy_from_eigs(e, 2) for e in eigs])
