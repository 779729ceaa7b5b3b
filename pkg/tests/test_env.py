import json

import numpy as np
import pytest

import oracles
from disentangler.entanglement import concurrence
from disentangler.env import (
    DisentangleEnv,
    EpisodeDoneError,
    Observation,
    StepOutcome,
    action_to_pair,
    featurize_pair,
    is_success,
    num_actions,
    pair_to_action,
    unfeaturize_pair,
)
from disentangler.qsim import Statevector, qubit_pairs, reduced_density_pair, sample_pattern_state, parse_pattern


def test_featurize_layout():
    np.testing.assert_array_equal(featurize_pair(np.diag([1.0, 0, 0, 0])), [1, 0, 0, 0] + [0] * 12)
    np.testing.assert_array_equal(featurize_pair(np.eye(4) / 4), [0.25] * 4 + [0] * 12)
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 1], rho[1, 0] = 0.1 + 0.2j, 0.1 - 0.2j
    rho[2, 3], rho[3, 2] = -0.3j, 0.3j
    f = featurize_pair(rho)
    assert list(f[4:6]) == [0.1, 0.2]  # (0,1)
    assert list(f[14:16]) == [0.0, -0.3]  # (2,3), last upper entry


def test_featurize_roundtrip(rng):
    for _ in range(20):
        rho = oracles.random_density(rng)
        np.testing.assert_allclose(unfeaturize_pair(featurize_pair(rho)), rho, atol=1e-12)


@pytest.mark.parametrize("L,a,pair", [(4, 0, (0, 1)), (4, 5, (2, 3)), (4, 3, (1, 2)), (6, 14, (4, 5))])
def test_action_codec(L, a, pair):
    assert action_to_pair(a, L) == pair
    assert pair_to_action(pair, L) == a


def test_action_codec_is_lexicographic_bijection():
    for L in range(2, 8):
        pairs = [action_to_pair(a, L) for a in range(num_actions(L))]
        assert pairs == qubit_pairs(L)
    assert num_actions(6) == 15


@pytest.mark.parametrize("a", [-1, 6])
def test_action_out_of_range(a):
    with pytest.raises(ValueError):
        action_to_pair(a, 4)


@pytest.mark.parametrize(
    "ent,expected", [([0.0] * 4, True), ([1.0] + [0.0] * 5, False), ([9e-4] * 6, True), ([1e-3] * 3, False)]
)
def test_is_success(ent, expected):
    assert is_success(ent) is expected


def test_reset_product_pattern():
    env = DisentangleEnv("R-R-R-R")
    obs = env.reset(seed=3)
    for rho in obs.pair_matrices():
        assert concurrence(rho).concurrence < 1e-10
    assert is_success(env.entropies)


def test_reset_deterministic():
    a = DisentangleEnv("RRRR").reset(seed=5)
    b = DisentangleEnv("RRRR").reset(seed=5)
    assert np.array_equal(a.features, b.features)
    assert a.features.shape == (6, 16)


def test_reset_block_pattern_concurrence():
    obs = DisentangleEnv("RR-RR").reset(seed=8)
    conc = [concurrence(r).concurrence for r in obs.pair_matrices()]
    entangled = [k for k, c in enumerate(conc) if c > 1e-8]
    # pairs (0,1) and (2,3) are actions 0 and 5; a Haar 2-qubit block is entangled almost surely
    assert entangled == [0, 5]


def test_observation_matches_hidden_rdms():
    env = DisentangleEnv("RRRRR")
    obs = env.reset(seed=1)
    state = sample_pattern_state(parse_pattern("RRRRR"), np.random.default_rng(1))
    for k, pair in enumerate(qubit_pairs(5)):
        np.testing.assert_allclose(obs.pair_matrices()[k], reduced_density_pair(state, pair), atol=1e-12)
    for _ in range(5):
        out = env.step(int(np.random.default_rng(0).integers(10)))
    assert out.next_observation.features.shape == (10, 16)


def test_bell_episode(bell):
    env = DisentangleEnv("RR")
    env.reset_from_state(bell)
    out = env.step(0)
    assert out.reward == pytest.approx(2.0, abs=1e-9)
    assert out.success and out.done and out.entangled_count == 0
    with pytest.raises(EpisodeDoneError):
        env.step(0)


def test_product_state_reward_zero():
    env = DisentangleEnv("R-R-R")
    env.reset(seed=0)
    out = env.step(1)
    assert out.reward == 0.0
    assert out.success


def test_ghz3_first_step_reward(ghz3):
    env = DisentangleEnv("RRR")
    env.reset_from_state(ghz3)
    out = env.step(pair_to_action((0, 1), 3))
    assert out.reward == pytest.approx(-1.0, abs=1e-9)
    assert out.entangled_count == 2
    assert not out.done
    out = env.step(pair_to_action((1, 2), 3))
    assert out.success and env.record.gate_count == 2


def test_step_action_out_of_range():
    env = DisentangleEnv("RRRR")
    env.reset(seed=0)
    with pytest.raises(ValueError):
        env.step(6)


def test_budget_truncates():
    env = DisentangleEnv("RRRRRR", max_budget=3)
    env.reset(seed=0)
    outs = [env.step(0), env.step(0), env.step(0)]
    assert outs[-1].done and not outs[-1].success
    assert env.record.gate_count == 3


def test_reward_bounds_and_counts(rng):
    env = DisentangleEnv("RRRRR")
    L = 5
    steps = 0
    while steps < 10_000:
        env.reset(seed=rng)
        while not env.done and steps < 10_000:
            before = env.entropies
            out = env.step(int(rng.integers(env.num_actions)))
            steps += 1
            top = np.maximum(before, out.per_qubit_entropy)
            live = top >= 1e-12
            terms = (before[live] - out.per_qubit_entropy[live]) / top[live]
            assert np.all(terms >= -1 - 1e-12) and np.all(terms <= 1 + 1e-12)
            assert -2 * L - 1e-9 <= out.reward <= L + 1e-9
            assert out.entangled_count == int(np.sum(out.per_qubit_entropy > 1e-3))
            if out.success:
                assert out.done
                assert np.mean(out.per_qubit_entropy) < 1e-3
            assert env.steps_taken <= 128


def test_episode_record_serialization(ghz3):
    env = DisentangleEnv("RRR")
    env.reset_from_state(ghz3, "GHZ")
    env.step(0)
    env.step(2)
    rec = env.record
    lines = rec.to_jsonl().strip().split("\n")
    assert len(lines) == 2 == rec.gate_count
    first = json.loads(lines[0])
    assert first["pair"] == [0, 1] and first["pattern"] == "GHZ"
    assert np.array(first["gate"]).shape == (4, 4, 2)
    row = rec.summary_row()
    assert row["success"] == 1 and row["gate_count"] == 2 and row["final_mean_entropy"] < 1e-10


def test_hidden_state_not_exposed():
    env = DisentangleEnv("RRRR")
    obs = env.reset(seed=0)
    out = env.step(0)

    def complex_arrays(obj):
        names = [n for n in vars(obj) if not n.startswith("_")] if hasattr(obj, "__dict__") else []
        return [n for n in names if isinstance(getattr(obj, n), np.ndarray) and np.iscomplexobj(getattr(obj, n))]

    assert complex_arrays(env) == []
    assert set(Observation.__dataclass_fields__) == {"num_qubits", "features"}
    assert "amplitudes" not in StepOutcome.__dataclass_fields__
    assert not np.iscomplexobj(obs.features) and not np.iscomplexobj(out.next_observation.features)
    public = [n for n in dir(env) if not n.startswith("_")]
    assert not {"psi", "state", "amplitudes", "statevector"} & set(public)


def test_mixed_qubit_patterns_rejected():
    with pytest.raises(ValueError):
        DisentangleEnv(["RRRR", "RRR"])
