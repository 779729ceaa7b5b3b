"""Clipped-surrogate actor-critic training, evaluation and rollouts."""
from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .env import DisentangleEnv
from .qsim import EntanglementPattern, parse_pattern
from .policy import (
    ActionHistory,
    PolicyParameters,
    actor_backward,
    actor_forward,
    count_parameters,
    critic_backward,
    critic_forward,
    log_softmax,
    select_action,
    softmax,
)

log = logging.getLogger(__name__)

ABSENT = "--"


@dataclass
class TrainConfig:
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_ratio: float = 0.2
    learning_rate: float = 1e-3
    lr_schedule: str = "linear"  # "linear" decays to 0 over the run, "constant" keeps it fixed
    episodes_per_update: int = 32
    updates: int = 400
    epochs: int = 4
    minibatch_size: int = 128
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    max_grad_norm: float = 0.5
    eval_every: int = 0
    eval_states: int = 500
    eval_seed: int = 2024
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ValueError("gae_lambda must be in [0, 1]")
        for name in ("clip_ratio", "learning_rate", "max_grad_norm"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("episodes_per_update", "updates", "epochs", "minibatch_size", "eval_states"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.lr_schedule not in ("linear", "constant"):
            raise ValueError("lr_schedule must be 'linear' or 'constant'")
        if self.eval_every < 0 or self.entropy_coef < 0 or self.value_coef < 0:
            raise ValueError("eval_every, entropy_coef and value_coef must be >= 0")


# -- rollouts --------------------------------------------------------------

@dataclass
class Trajectory:
    observations: np.ndarray
    actions: np.ndarray
    log_probs: np.ndarray
    rewards: np.ndarray
    values: np.ndarray
    dones: np.ndarray
    success: bool
    bootstrap_value: float  # V(s_T) if truncated by the budget, else 0

    def __len__(self):
        return len(self.actions)


def episode_seeds(seed, n):
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in seq.spawn(n)]


def collect_rollouts(params: PolicyParameters, env_factory, n: int, seed) -> list[Trajectory]:
    """Run ``n`` episodes in lockstep with sampled actions.

    Every episode owns a generator derived from ``seed``, used both for its
    initial state and its action draws.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rngs = episode_seeds(seed, n)
    envs = [env_factory() for _ in range(n)]
    obs = [env.reset(seed=rng) for env, rng in zip(envs, rngs)]
    logs = [{"obs": [], "act": [], "logp": [], "rew": [], "val": [], "done": []} for _ in range(n)]
    active = list(range(n))
    while active:
        x = np.stack([obs[k].flat for k in active])
        logits, _ = actor_forward(params, x, with_cache=False)
        probs = softmax(logits)
        logp = log_softmax(logits)
        values, _ = critic_forward(params, x)
        still = []
        for row, k in enumerate(active):
            a = int(rngs[k].choice(probs.shape[1], p=probs[row]))
            out = envs[k].step(a)
            lg = logs[k]
            lg["obs"].append(x[row])
            lg["act"].append(a)
            lg["logp"].append(logp[row, a])
            lg["rew"].append(out.reward)
            lg["val"].append(values[row])
            lg["done"].append(out.done)
            obs[k] = out.next_observation
            if not out.done:
                still.append(k)
        active = still
    trajectories = []
    truncated = [k for k in range(n) if not envs[k].record.success]
    boot = np.zeros(n)
    if truncated:
        v, _ = critic_forward(params, np.stack([obs[k].flat for k in truncated]))
        boot[truncated] = v
    for k, lg in enumerate(logs):
        trajectories.append(
            Trajectory(
                np.array(lg["obs"]),
                np.array(lg["act"], dtype=int),
                np.array(lg["logp"]),
                np.array(lg["rew"]),
                np.array(lg["val"]),
                np.array(lg["done"], dtype=bool),
                envs[k].record.success,
                float(boot[k]),
            )
        )
    return trajectories


def gae(rewards, values, bootstrap_value, gamma, lam):
    """Advantages for one episode; the last step bootstraps from ``bootstrap_value``."""
    T = len(rewards)
    adv = np.zeros(T)
    next_value, running = bootstrap_value, 0.0
    for t in reversed(range(T)):
        delta = rewards[t] + gamma * next_value - values[t]
        running = delta + gamma * lam * running
        adv[t] = running
        next_value = values[t]
    return adv


def compute_advantages(batch: list[Trajectory], gamma: float, lam: float, normalize: bool = True):
    """Concatenated (advantages, return targets) over the batch."""
    advs, rets = [], []
    for traj in batch:
        a = gae(traj.rewards, traj.values, traj.bootstrap_value, gamma, lam)
        advs.append(a)
        rets.append(a + traj.values)
    adv = np.concatenate(advs) if advs else np.zeros(0)
    ret = np.concatenate(rets) if rets else np.zeros(0)
    if normalize and adv.size:
        adv = (adv - adv.mean()) / max(adv.std(), 1e-8)
    return adv, ret


# -- optimisation ----------------------------------------------------------

class Adam:
    def __init__(self, lr=3e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: PolicyParameters, grads: dict) -> PolicyParameters:
        self.t += 1
        out = {}
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for name, p in params.arrays.items():
            g = grads[name]
            m = self.m.get(name, np.zeros_like(p))
            v = self.v.get(name, np.zeros_like(p))
            m = self.beta1 * m + (1.0 - self.beta1) * g
            v = self.beta2 * v + (1.0 - self.beta2) * g * g
            self.m[name], self.v[name] = m, v
            out[name] = p - self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
        return PolicyParameters(params.config, out)


class NonFiniteLossError(FloatingPointError):
    def __init__(self, diagnostics: dict):
        super().__init__(f"non-finite loss, update aborted: {diagnostics}")
        self.diagnostics = diagnostics


def ppo_loss_and_grads(params, x, actions, old_logp, adv, returns, cfg: TrainConfig):
    """Loss terms and parameter gradients for one minibatch."""
    n = len(actions)
    rows = np.arange(n)
    logits, cache = actor_forward(params, x)
    logp_all = log_softmax(logits)
    probs = np.exp(logp_all)
    logp = logp_all[rows, actions]
    ratio = np.exp(logp - old_logp)
    lo, hi = 1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio
    surr1 = ratio * adv
    surr2 = np.clip(ratio, lo, hi) * adv
    policy_loss = -float(np.minimum(surr1, surr2).mean())
    entropy_each = -(probs * logp_all).sum(axis=1)
    entropy = float(entropy_each.mean())
    values, critic_cache = critic_forward(params, x)
    value_loss = float(((values - returns) ** 2).mean())
    total = policy_loss + cfg.value_coef * value_loss - cfg.entropy_coef * entropy

    # gradient of -min(surr1, surr2) w.r.t. log pi(a): zero where the clip binds
    unclipped = surr1 <= surr2
    dlogp = np.where(unclipped, -ratio * adv, 0.0) / n
    dlogits = -dlogp[:, None] * probs
    dlogits[rows, actions] += dlogp
    dentropy = -probs * (logp_all + entropy_each[:, None])
    dlogits -= cfg.entropy_coef * dentropy / n
    grads = actor_backward(params, cache, dlogits)
    critic_backward(params, critic_cache, cfg.value_coef * 2.0 * (values - returns) / n, grads)
    stats = {
        "loss": total,
        "policy_loss": policy_loss,
        "value_loss": value_loss,
        "entropy": entropy,
        "approx_kl": float((old_logp - logp).mean()),
        "clip_frac": float((np.abs(ratio - 1.0) > cfg.clip_ratio).mean()),
    }
    return stats, grads


def _global_norm(grads):
    return float(np.sqrt(sum(float((g * g).sum()) for g in grads.values())))


def update(params: PolicyParameters, batch: list[Trajectory], cfg: TrainConfig, optimizer: Adam, rng):
    """One pass of minibatch steps over ``batch``; returns (params, loss report)."""
    if not batch or sum(len(t) for t in batch) == 0:
        raise ValueError("batch is empty")
    x = np.concatenate([t.observations for t in batch])
    actions = np.concatenate([t.actions for t in batch])
    old_logp = np.concatenate([t.log_probs for t in batch])
    adv, returns = compute_advantages(batch, cfg.gamma, cfg.gae_lambda)
    n = len(actions)
    totals: dict[str, float] = {}
    steps = 0
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.minibatch_size):
            idx = order[start : start + cfg.minibatch_size]
            stats, grads = ppo_loss_and_grads(
                params, x[idx], actions[idx], old_logp[idx], adv[idx], returns[idx], cfg
            )
            gnorm = _global_norm(grads)
            if not (np.isfinite(stats["loss"]) and np.isfinite(gnorm)):
                raise NonFiniteLossError({**stats, "grad_norm": gnorm, "minibatch": len(idx)})
            if gnorm > cfg.max_grad_norm:
                scale = cfg.max_grad_norm / gnorm
                grads = {k: g * scale for k, g in grads.items()}
            params = optimizer.step(params, grads)
            stats["grad_norm"] = gnorm
            for k, v in stats.items():
                totals[k] = totals.get(k, 0.0) + v
            steps += 1
    return params, {k: v / steps for k, v in totals.items()}


# -- evaluation ------------------------------------------------------------

@dataclass
class EvalMetrics:
    pattern: str
    n_states: int
    success_rate: float | None
    avg_gates: float | None
    gate_std: float | None
    param_count: int
    final_entropies: list[float] = field(default_factory=list)
    successes: list[bool] = field(default_factory=list)
    gate_counts: list[int] = field(default_factory=list)

    def row(self) -> dict:
        def fmt(v):
            return ABSENT if v is None else v

        return {
            "pattern": self.pattern,
            "n_states": self.n_states,
            "success_rate": fmt(self.success_rate),
            "avg_gates": fmt(self.avg_gates),
            "gate_std": fmt(self.gate_std),
            "param_count": self.param_count,
        }


METRIC_COLUMNS = ["pattern", "n_states", "success_rate", "avg_gates", "gate_std", "param_count"]


def run_greedy(params, envs, seeds, refinement=True):
    """Greedy lockstep episodes; ``seeds`` are per-episode generators or ints."""
    n = len(envs)
    obs = [env.reset(seed=s) for env, s in zip(envs, seeds)]
    histories = [ActionHistory() for _ in range(n)]
    active = list(range(n))
    while active:
        x = np.stack([obs[k].flat for k in active])
        logits, _ = actor_forward(params, x, with_cache=False)
        probs = softmax(logits)
        still = []
        for row, k in enumerate(active):
            a = select_action(probs[row], "greedy", refinement, histories[k])
            before = envs[k].entropies
            out = envs[k].step(a)
            histories[k].update(a, before, out.per_qubit_entropy)
            obs[k] = out.next_observation
            if not out.done:
                still.append(k)
        active = still
    return [env.record for env in envs]


def _eval_chunk(job):
    params, pattern, seeds, refinement, max_budget, epsilon = job
    envs = [DisentangleEnv(pattern, max_budget, epsilon, record_gates=False) for _ in seeds]
    return run_greedy(params, envs, [np.random.default_rng(s) for s in seeds], refinement)


def evaluate(
    params: PolicyParameters,
    patterns,
    n_states: int,
    seed: int,
    refinement: bool = True,
    max_budget: int = 128,
    epsilon: float = 1e-3,
    chunk: int = 100,
    workers: int = 1,
) -> list[EvalMetrics]:
    """Greedy evaluation over ``n_states`` initial states per pattern.

    The i-th state of every pattern comes from the i-th child of ``seed`` so
    that different models see the same evaluation set, whatever ``workers``.
    Parameters are only read.
    """
    if isinstance(patterns, str):
        patterns = [patterns]
    nparams = count_parameters(params)["total"]
    results = []
    for pattern in patterns:
        seq = np.random.SeedSequence(seed).spawn(n_states) if n_states > 0 else []
        jobs = [(params, pattern, seq[s : s + chunk], refinement, max_budget, epsilon)
                for s in range(0, n_states, chunk)]
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(workers) as pool:
                parts = list(pool.map(_eval_chunk, jobs))
        else:
            parts = [_eval_chunk(job) for job in jobs]
        records = [r for part in parts for r in part]
        ok = [r.success for r in records]
        gates = np.array([r.gate_count for r in records if r.success], dtype=float)
        label = pattern.label if isinstance(pattern, EntanglementPattern) else parse_pattern(pattern).label
        results.append(
            EvalMetrics(
                pattern=label,
                n_states=n_states,
                success_rate=float(np.mean(ok)) if records else None,
                avg_gates=float(gates.mean()) if gates.size else None,
                gate_std=float(gates.std()) if gates.size else None,
                param_count=nparams,
                final_entropies=[r.final_mean_entropy for r in records],
                successes=ok,
                gate_counts=[r.gate_count for r in records],
            )
        )
    return results


# -- training loop ---------------------------------------------------------

@dataclass
class TrainReport:
    rows: list[dict] = field(default_factory=list)
    eval_rows: list[dict] = field(default_factory=list)
    entropy_rows: list[dict] = field(default_factory=list)
    wall_clock: list[float] = field(default_factory=list)


REPORT_COLUMNS = [
    "update",
    "episodes",
    "samples",
    "mean_return",
    "success_rate",
    "mean_gates",
    "learning_rate",
    "loss",
    "policy_loss",
    "value_loss",
    "entropy",
    "approx_kl",
    "clip_frac",
    "grad_norm",
]
EVAL_COLUMNS = ["update", "pattern", "n_states", "success_rate", "avg_gates", "gate_std", "param_count"]
ENTROPY_COLUMNS = ["update", "pattern", "state", "final_mean_entropy", "success"]


def train(
    params: PolicyParameters,
    patterns,
    cfg: TrainConfig,
    max_budget: int = 128,
    epsilon: float = 1e-3,
    callback=None,
):
    """Train in place of ``params`` (a new object is returned); returns (params, TrainReport)."""
    if isinstance(patterns, str):
        patterns = [patterns]
    optimizer = Adam(cfg.learning_rate)
    root = np.random.SeedSequence(cfg.seed)
    update_seeds = root.spawn(cfg.updates)
    shuffle_rng = np.random.default_rng(root.spawn(1)[0])
    report = TrainReport()

    def factory():
        return DisentangleEnv(patterns, max_budget, epsilon, record_gates=False)

    t0 = time.perf_counter()
    for u in range(cfg.updates):
        if cfg.lr_schedule == "linear":
            optimizer.lr = cfg.learning_rate * (1.0 - u / cfg.updates)
        batch = collect_rollouts(params, factory, cfg.episodes_per_update, update_seeds[u])
        params, stats = update(params, batch, cfg, optimizer, shuffle_rng)
        succ = [t.success for t in batch]
        gates = [len(t) for t in batch if t.success]
        row = {
            "update": u + 1,
            "episodes": len(batch),
            "samples": sum(len(t) for t in batch),
            "mean_return": float(np.mean([t.rewards.sum() for t in batch])),
            "success_rate": float(np.mean(succ)),
            "mean_gates": float(np.mean(gates)) if gates else ABSENT,
            "learning_rate": optimizer.lr,
            **stats,
        }
        report.rows.append(row)
        report.wall_clock.append(time.perf_counter() - t0)
        if cfg.eval_every and ((u + 1) % cfg.eval_every == 0 or u + 1 == cfg.updates):
            for m in evaluate(params, patterns, cfg.eval_states, cfg.eval_seed, True, max_budget, epsilon):
                report.eval_rows.append({"update": u + 1, **m.row()})
                for s, (e, ok) in enumerate(zip(m.final_entropies, m.successes)):
                    report.entropy_rows.append(
                        {"update": u + 1, "pattern": m.pattern, "state": s, "final_mean_entropy": e, "success": int(ok)}
                    )
            log.info("update %d eval %s", u + 1, report.eval_rows[-1])
        if callback is not None:
            callback(u + 1, params, row)
        max_abs = max(float(np.abs(a).max()) for a in params.arrays.values())
        if not np.isfinite(max_abs) or max_abs > 1e6:
            raise NonFiniteLossError({"update": u + 1, "max_abs_param": max_abs})
    return params, report


def config_dict(cfg: TrainConfig) -> dict:
    return asdict(cfg)
