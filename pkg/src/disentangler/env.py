"""Partially observed disentangling environment.

The agent sees only the two-qubit reduced states; each action names a pair,
and the fixed local solver acts on it.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .qsim import (
    EntanglementPattern,
    Statevector,
    parse_pattern,
    qubit_pairs,
    sample_pattern_state,
    single_qubit_entropies,
)
from .solver import solver_step

EPSILON = 1e-3
MAX_BUDGET = 128
FEATURES_PER_PAIR = 16
_ZERO_ENTROPY = 1e-12

_UPPER = [(r, c) for r in range(4) for c in range(r + 1, 4)]
_UPPER_ROWS = np.array([r for r, _ in _UPPER])
_UPPER_COLS = np.array([c for _, c in _UPPER])


class EpisodeDoneError(RuntimeError):
    """step() called on a finished episode."""


def num_actions(num_qubits: int) -> int:
    return num_qubits * (num_qubits - 1) // 2


def action_to_pair(action: int, num_qubits: int) -> tuple[int, int]:
    n = num_actions(num_qubits)
    if not 0 <= action < n:
        raise ValueError(f"action {action} out of range [0, {n})")
    for i in range(num_qubits - 1):
        row = num_qubits - 1 - i
        if action < row:
            return i, i + 1 + int(action)
        action -= row
    raise AssertionError("unreachable")


def pair_to_action(pair, num_qubits: int) -> int:
    i, j = pair
    if not 0 <= i < j < num_qubits:
        raise ValueError(f"pair {pair!r} invalid for {num_qubits} qubits")
    return i * (2 * num_qubits - i - 1) // 2 + (j - i - 1)


def featurize_pairs(rhos: np.ndarray) -> np.ndarray:
    """(..., 4, 4) -> (..., 16): 4 diagonal reals, then re/im of the upper triangle."""
    rhos = np.asarray(rhos)
    upper = rhos[..., _UPPER_ROWS, _UPPER_COLS]
    inter = np.stack([upper.real, upper.imag], axis=-1).reshape(rhos.shape[:-2] + (12,))
    diag = np.diagonal(rhos, axis1=-2, axis2=-1).real
    return np.concatenate([diag, inter], axis=-1)


def featurize_pair(rho: np.ndarray) -> np.ndarray:
    return featurize_pairs(rho)


def unfeaturize_pair(features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=float)
    rho = np.zeros(features.shape[:-1] + (4, 4), dtype=complex)
    idx = np.arange(4)
    rho[..., idx, idx] = features[..., :4]
    upper = features[..., 4::2] + 1j * features[..., 5::2]
    rho[..., _UPPER_ROWS, _UPPER_COLS] = upper
    rho[..., _UPPER_COLS, _UPPER_ROWS] = upper.conj()
    return rho


@dataclass(frozen=True)
class Observation:
    num_qubits: int
    features: np.ndarray  # (num_pairs, 16), lexicographic pair order

    @property
    def flat(self) -> np.ndarray:
        return self.features.reshape(-1)

    def pair_matrices(self) -> np.ndarray:
        return unfeaturize_pair(self.features)


@dataclass(frozen=True)
class StepOutcome:
    reward: float
    next_observation: Observation
    done: bool
    success: bool
    per_qubit_entropy: np.ndarray
    entangled_count: int
    pair: tuple[int, int]


@dataclass
class StepLog:
    pair: tuple[int, int]
    reward: float
    entropies: list[float]
    gate: list


@dataclass
class EpisodeRecord:
    initial_pattern: str
    seed: int | None
    initial_entropies: list[float] = field(default_factory=list)
    steps: list[StepLog] = field(default_factory=list)
    success: bool = False

    @property
    def gate_count(self) -> int:
        return len(self.steps)

    @property
    def final_mean_entropy(self) -> float:
        last = self.steps[-1].entropies if self.steps else self.initial_entropies
        return float(np.mean(last)) if last else 0.0

    def to_jsonl(self) -> str:
        lines = []
        for t, s in enumerate(self.steps):
            lines.append(
                json.dumps(
                    {
                        "step": t + 1,
                        "pattern": self.initial_pattern,
                        "seed": self.seed,
                        "pair": list(s.pair),
                        "reward": s.reward,
                        "entropies": s.entropies,
                        "gate": s.gate,
                    }
                )
            )
        return "\n".join(lines) + ("\n" if lines else "")

    def summary_row(self) -> dict:
        return {
            "pattern": self.initial_pattern,
            "seed": self.seed,
            "success": int(self.success),
            "gate_count": self.gate_count,
            "final_mean_entropy": self.final_mean_entropy,
        }


SUMMARY_COLUMNS = ["pattern", "seed", "success", "gate_count", "final_mean_entropy"]


def is_success(per_qubit_entropy, epsilon: float = EPSILON) -> bool:
    return bool(np.mean(per_qubit_entropy) < epsilon)


def step_reward(before: np.ndarray, after: np.ndarray, epsilon: float = EPSILON):
    """Normalized entropy drop summed over qubits, minus the entangled count.

    A qubit whose entropy is ~0 both before and after contributes 0.
    """
    top = np.maximum(before, after)
    live = top >= _ZERO_ENTROPY
    terms = np.zeros_like(before)
    terms[live] = (before[live] - after[live]) / top[live]
    n = int(np.count_nonzero(after > epsilon))
    return float(terms.sum()) - n, n


class DisentangleEnv:
    """One episode at a time; the hidden statevector is never exposed."""

    def __init__(
        self,
        patterns="RRRR",
        max_budget: int = MAX_BUDGET,
        epsilon: float = EPSILON,
        record_gates: bool = True,
    ):
        if isinstance(patterns, (str, EntanglementPattern)):
            patterns = [patterns]
        self.patterns = [p if isinstance(p, EntanglementPattern) else parse_pattern(p) for p in patterns]
        sizes = {p.num_qubits for p in self.patterns}
        if len(sizes) != 1:
            raise ValueError(f"all patterns must share one qubit count, got {sorted(sizes)}")
        if max_budget < 1:
            raise ValueError("max_budget must be >= 1")
        self.num_qubits = sizes.pop()
        self.max_budget = int(max_budget)
        self.epsilon = float(epsilon)
        self.record_gates = record_gates
        self.pairs = qubit_pairs(self.num_qubits)
        self._psi = None
        self._rhos = None
        self._entropy = None
        self._done = True
        self.record: EpisodeRecord | None = None

    @property
    def num_actions(self) -> int:
        return len(self.pairs)

    @property
    def done(self) -> bool:
        return self._done

    @property
    def steps_taken(self) -> int:
        return self.record.gate_count if self.record else 0

    def reset(self, pattern=None, seed=None) -> Observation:
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        if pattern is None:
            pattern = self.patterns[int(rng.integers(len(self.patterns)))] if len(self.patterns) > 1 else self.patterns[0]
        elif not isinstance(pattern, EntanglementPattern):
            pattern = parse_pattern(pattern)
        if pattern.num_qubits != self.num_qubits:
            raise ValueError(f"pattern {pattern.label} does not have {self.num_qubits} qubits")
        state = sample_pattern_state(pattern, rng)
        return self._start(state, pattern.label, seed if isinstance(seed, (int, np.integer)) else None)

    def reset_from_state(self, state: Statevector, label: str = "custom") -> Observation:
        if state.num_qubits != self.num_qubits:
            raise ValueError(f"state has {state.num_qubits} qubits, env expects {self.num_qubits}")
        return self._start(state, label, None)

    def _start(self, state, label, seed):
        self._psi = state.amplitudes.copy()
        self._rhos = kernels.pair_rdms(self._psi, self.num_qubits)
        self._entropy = single_qubit_entropies(self._psi, self.num_qubits)
        self._done = False
        self.record = EpisodeRecord(
            label, None if seed is None else int(seed), initial_entropies=self._entropy.tolist()
        )
        return self._observation()

    def _observation(self):
        return Observation(self.num_qubits, featurize_pairs(self._rhos))

    def step(self, action: int) -> StepOutcome:
        if self._done:
            raise EpisodeDoneError("episode finished; call reset()")
        i, j = action_to_pair(int(action), self.num_qubits)
        k = int(action)
        self._psi, gate = solver_step(self._psi, self.num_qubits, i, j, self._rhos[k])
        self._rhos = kernels.pair_rdms(self._psi, self.num_qubits)
        after = single_qubit_entropies(self._psi, self.num_qubits)
        reward, n = step_reward(self._entropy, after, self.epsilon)
        self._entropy = after
        success = is_success(after, self.epsilon)
        self.record.steps.append(StepLog((i, j), reward, after.tolist(), gate.to_list() if self.record_gates else None))
        self._done = success or self.record.gate_count >= self.max_budget
        self.record.success = success
        return StepOutcome(reward, self._observation(), self._done, success, after.copy(), n, (i, j))

    @property
    def entropies(self) -> np.ndarray:
        """Current single-qubit entropies (bits)."""
        return self._entropy.copy()
