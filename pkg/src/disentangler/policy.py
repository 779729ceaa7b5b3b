"""Modular pair-selection policy and critic with hand-written backprop.

Actor: pair features -> encoder -> latent z -> head -> logits -> softmax.
The hybrid head is z -> linear -> pi*tanh -> PQC <Z> readout -> MLP; the
classical head is an MLP on z directly. The critic is a separate MLP over
the same features. All parameters live in one ordered name -> array map so
that optimizers, checkpoints and finite-difference checks can use a flat
vector view.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .env import FEATURES_PER_PAIR, Observation, num_actions
from .pqc import CircuitConfig, count_pqc_parameters, pqc_forward_batch, pqc_jacobians_batch

CHECKPOINT_VERSION = 1
REFINE_TOL = 1e-9
HEADS = ("hybrid", "mlp")


@dataclass(frozen=True)
class EncoderConfig:
    hidden_sizes: tuple[int, ...] = (128, 64)
    latent_dim: int = 32
    activation: str = "tanh"
    kind: str = "mlp"

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if self.latent_dim < 1 or any(h < 1 for h in self.hidden_sizes):
            raise ValueError("encoder sizes must be positive")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.kind not in ENCODERS:
            raise ValueError(f"unknown encoder {self.kind!r}; available: {sorted(ENCODERS)}")


@dataclass(frozen=True)
class PolicyConfig:
    num_qubits: int
    head: str = "hybrid"
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    pqc: CircuitConfig | None = field(default_factory=lambda: CircuitConfig(4, 3))
    post_hidden: tuple[int, ...] = (32,)
    head_hidden: tuple[int, ...] = (32,)
    critic_hidden: tuple[int, ...] = (128, 64)

    def __post_init__(self):
        if self.head not in HEADS:
            raise ValueError(f"head must be one of {HEADS}, got {self.head!r}")
        if self.head == "hybrid" and self.pqc is None:
            raise ValueError("hybrid head needs a pqc config")
        if self.num_qubits < 2:
            raise ValueError("need at least 2 system qubits")
        for name in ("post_hidden", "head_hidden", "critic_hidden"):
            object.__setattr__(self, name, tuple(int(h) for h in getattr(self, name)))

    @property
    def input_dim(self) -> int:
        return num_actions(self.num_qubits) * FEATURES_PER_PAIR

    @property
    def num_actions(self) -> int:
        return num_actions(self.num_qubits)

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.head != "hybrid":
            d["pqc"] = None
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PolicyConfig":
        d = dict(d)
        d["encoder"] = EncoderConfig(**d.get("encoder") or {})
        d["pqc"] = CircuitConfig(**d["pqc"]) if d.get("pqc") else None
        return cls(**d)


# -- activations and dense stacks ------------------------------------------

def _tanh(x):
    return np.tanh(x)


def _tanh_grad(y):
    return 1.0 - y * y


def _relu(x):
    return np.maximum(x, 0.0)


def _relu_grad(y):
    return (y > 0.0).astype(y.dtype)


ACTIVATIONS = {"tanh": (_tanh, _tanh_grad), "relu": (_relu, _relu_grad)}


def _stack_shapes(prefix, sizes):
    shapes = []
    for k, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
        shapes.append((f"{prefix}.W{k}", (a, b)))
        shapes.append((f"{prefix}.b{k}", (b,)))
    return shapes


def mlp_forward(params, prefix, x, depth, activation="tanh", final_activation=True):
    """Dense stack; returns output and the per-layer activations for backprop."""
    act, _ = ACTIVATIONS[activation]
    acts = [x]
    for k in range(depth):
        x = x @ params[f"{prefix}.W{k}"] + params[f"{prefix}.b{k}"]
        if k < depth - 1 or final_activation:
            x = act(x)
        acts.append(x)
    return x, acts


def mlp_backward(params, prefix, acts, grad_out, depth, grads, activation="tanh", final_activation=True):
    """Accumulates weight gradients into ``grads``; returns d(input)."""
    _, dact = ACTIVATIONS[activation]
    g = grad_out
    for k in reversed(range(depth)):
        if k < depth - 1 or final_activation:
            g = g * dact(acts[k + 1])
        grads[f"{prefix}.W{k}"] += acts[k].T @ g
        grads[f"{prefix}.b{k}"] += g.sum(axis=0)
        g = g @ params[f"{prefix}.W{k}"].T
    return g


class MLPEncoder:
    """Flatten-then-MLP encoder over concatenated pair features."""

    def __init__(self, config: EncoderConfig, input_dim: int):
        self.config = config
        self.sizes = (input_dim,) + config.hidden_sizes + (config.latent_dim,)
        self.depth = len(self.sizes) - 1

    def shapes(self):
        return _stack_shapes("enc", self.sizes)

    # the latent layer is affine; heads squash it themselves where needed
    def forward(self, params, x):
        return mlp_forward(params, "enc", x, self.depth, self.config.activation, final_activation=False)

    def backward(self, params, cache, dz, grads):
        return mlp_backward(
            params, "enc", cache, dz, self.depth, grads, self.config.activation, final_activation=False
        )


# sequence encoders register here under their EncoderConfig.kind
ENCODERS = {"mlp": MLPEncoder}


# -- parameters ------------------------------------------------------------

class PolicyParameters:
    """Named parameter arrays plus the config that shaped them."""

    def __init__(self, config: PolicyConfig, arrays: dict[str, np.ndarray]):
        self.config = config
        self.arrays = arrays

    def __getitem__(self, name):
        return self.arrays[name]

    def names(self):
        return list(self.arrays)

    def flat(self) -> np.ndarray:
        return np.concatenate([a.reshape(-1) for a in self.arrays.values()])

    def with_flat(self, vec) -> "PolicyParameters":
        vec = np.asarray(vec, dtype=float)
        out, k = {}, 0
        for name, a in self.arrays.items():
            out[name] = vec[k : k + a.size].reshape(a.shape).copy()
            k += a.size
        if k != vec.size:
            raise ValueError(f"flat vector has {vec.size} entries, expected {k}")
        return PolicyParameters(self.config, out)

    def zeros_like(self) -> dict[str, np.ndarray]:
        return {name: np.zeros_like(a) for name, a in self.arrays.items()}

    def copy(self) -> "PolicyParameters":
        return PolicyParameters(self.config, {k: v.copy() for k, v in self.arrays.items()})


def parameter_shapes(config: PolicyConfig):
    enc = ENCODERS[config.encoder.kind](config.encoder, config.input_dim)
    shapes = list(enc.shapes())
    dz, A = config.encoder.latent_dim, config.num_actions
    if config.head == "hybrid":
        nq = config.pqc.num_qubits
        shapes += [("proj.W", (dz, nq)), ("proj.b", (nq,)), ("pqc.theta", config.pqc.param_shape)]
        shapes += _stack_shapes("post", (nq,) + config.post_hidden + (A,))
    else:
        shapes += _stack_shapes("head", (dz,) + config.head_hidden + (A,))
    shapes += _stack_shapes("critic", (config.input_dim,) + config.critic_hidden + (1,))
    return shapes


def init_parameters(config: PolicyConfig, seed=None) -> PolicyParameters:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    arrays = {}
    shapes = parameter_shapes(config)
    last_actor = "post" if config.head == "hybrid" else "head"
    last_actor_w = max(n for n, _ in shapes if n.startswith(f"{last_actor}.W"))
    for name, shape in shapes:
        if name == "pqc.theta":
            arrays[name] = rng.normal(0.0, 0.1, size=shape)
        elif ".W" in name or name == "proj.W":
            limit = np.sqrt(6.0 / (shape[0] + shape[1]))
            w = rng.uniform(-limit, limit, size=shape)
            if name == last_actor_w:
                w *= 0.01
            arrays[name] = w
        else:
            arrays[name] = np.zeros(shape)
    return PolicyParameters(config, arrays)


def count_parameters(params) -> dict:
    """Trainable-real counts per module and in total."""
    config = params.config if isinstance(params, PolicyParameters) else params
    by_module: dict[str, int] = {}
    for name, shape in parameter_shapes(config):
        module = name.split(".")[0]
        by_module[module] = by_module.get(module, 0) + int(np.prod(shape))
    if config.head == "hybrid":
        assert by_module["pqc"] == count_pqc_parameters(config.pqc)
    by_module["actor"] = sum(v for k, v in by_module.items() if k != "critic")
    by_module["total"] = by_module["actor"] + by_module["critic"]
    return by_module


# -- forward / backward ----------------------------------------------------

@dataclass(frozen=True)
class ActionDistribution:
    logits: np.ndarray
    probabilities: np.ndarray


def softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def _as_batch(obs):
    if isinstance(obs, Observation):
        return obs.flat[None, :]
    x = np.asarray(obs, dtype=float)
    return x[None, :] if x.ndim == 1 else x


def _encoder(config):
    return ENCODERS[config.encoder.kind](config.encoder, config.input_dim)


def encode(observation, params: PolicyParameters) -> np.ndarray:
    x = _as_batch(observation)
    z, _ = _encoder(params.config).forward(params.arrays, x)
    return z[0] if isinstance(observation, Observation) or np.ndim(observation) == 1 else z


def actor_forward(params: PolicyParameters, x, with_cache=True):
    """Batched logits; ``x`` is (batch, input_dim)."""
    config, p = params.config, params.arrays
    enc = _encoder(config)
    z, enc_cache = enc.forward(p, x)
    cache = {"x": x, "enc": enc_cache, "z": z}
    if config.head == "hybrid":
        a = z @ p["proj.W"] + p["proj.b"]
        angles = np.pi * np.tanh(a)
        m = pqc_forward_batch(config.pqc, p["pqc.theta"], angles)
        depth = len(config.post_hidden) + 1
        logits, post = mlp_forward(p, "post", m, depth, final_activation=False)
        cache.update(angles=angles, m=m, post=post)
    else:
        depth = len(config.head_hidden) + 1
        logits, head = mlp_forward(p, "head", z, depth, final_activation=False)
        cache.update(head=head)
    return logits, (cache if with_cache else None)


def actor_backward(params: PolicyParameters, cache, dlogits, grads=None):
    """Backprop d(loss)/d(logits) through the actor into ``grads``."""
    config, p = params.config, params.arrays
    if grads is None:
        grads = params.zeros_like()
    if config.head == "hybrid":
        depth = len(config.post_hidden) + 1
        dm = mlp_backward(p, "post", cache["post"], dlogits, depth, grads, final_activation=False)
        j_theta, j_in = pqc_jacobians_batch(config.pqc, p["pqc.theta"], cache["angles"])
        grads["pqc.theta"] += np.einsum("bq,bqk->k", dm, j_theta).reshape(config.pqc.param_shape)
        dangles = np.einsum("bq,bqk->bk", dm, j_in)
        t = cache["angles"] / np.pi
        da = dangles * np.pi * (1.0 - t * t)
        grads["proj.W"] += cache["z"].T @ da
        grads["proj.b"] += da.sum(axis=0)
        dz = da @ p["proj.W"].T
    else:
        depth = len(config.head_hidden) + 1
        dz = mlp_backward(p, "head", cache["head"], dlogits, depth, grads, final_activation=False)
    _encoder(config).backward(p, cache["enc"], dz, grads)
    return grads


def critic_forward(params: PolicyParameters, x):
    depth = len(params.config.critic_hidden) + 1
    v, acts = mlp_forward(params.arrays, "critic", x, depth, final_activation=False)
    return v[:, 0], acts


def critic_backward(params: PolicyParameters, acts, dvalues, grads=None):
    if grads is None:
        grads = params.zeros_like()
    depth = len(params.config.critic_hidden) + 1
    mlp_backward(params.arrays, "critic", acts, dvalues[:, None], depth, grads, final_activation=False)
    return grads


def flat_grads(params: PolicyParameters, grads: dict) -> np.ndarray:
    return np.concatenate([grads[n].reshape(-1) for n in params.arrays])


def log_prob_gradient(params: PolicyParameters, x, actions):
    """Sum over the batch of log pi(a|x), and its gradient dict."""
    x = _as_batch(x)
    actions = np.asarray(actions, dtype=int)
    logits, cache = actor_forward(params, x)
    rows = np.arange(len(actions))
    logp = log_softmax(logits)
    dlogits = -np.exp(logp)
    dlogits[rows, actions] += 1.0
    return float(logp[rows, actions].sum()), actor_backward(params, cache, dlogits)


def value_gradient(params: PolicyParameters, x):
    """Sum over the batch of V(x), and its gradient dict."""
    x = _as_batch(x)
    v, acts = critic_forward(params, x)
    return float(v.sum()), critic_backward(params, acts, np.ones_like(v))


def forward(observation, params: PolicyParameters) -> ActionDistribution:
    logits, _ = actor_forward(params, _as_batch(observation), with_cache=False)
    return ActionDistribution(logits[0], softmax(logits)[0])


def forward_hybrid(observation, params: PolicyParameters) -> ActionDistribution:
    if params.config.head != "hybrid":
        raise ValueError("parameters belong to a classical-head policy")
    return forward(observation, params)


def forward_classical(observation, params: PolicyParameters) -> ActionDistribution:
    if params.config.head != "mlp":
        raise ValueError("parameters belong to a hybrid-head policy")
    return forward(observation, params)


def critic_value(observation, params: PolicyParameters) -> float:
    v, _ = critic_forward(params, _as_batch(observation))
    return float(v[0])


# -- action selection ------------------------------------------------------

@dataclass
class ActionHistory:
    """What the refinement rule needs to know about the previous step."""

    prev_action: int | None = None
    prev_reduction: float | None = None

    def update(self, action, entropy_before, entropy_after):
        self.prev_action = int(action)
        self.prev_reduction = float(np.sum(entropy_before) - np.sum(entropy_after))


def select_action(dist, mode="greedy", refinement=False, history: ActionHistory | None = None, rng=None) -> int:
    """Pick a pair index.

    Greedy ties go to the lowest index. With refinement, an immediate repeat
    of a pair whose last application made no progress is replaced by the
    most probable other pair.
    """
    probs = dist.probabilities if isinstance(dist, ActionDistribution) else np.asarray(dist)
    if mode == "greedy":
        action = int(np.argmax(probs))
    elif mode == "sample":
        if rng is None:
            raise ValueError("sample mode needs an rng")
        action = int(rng.choice(len(probs), p=probs))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if (
        refinement
        and history is not None
        and history.prev_action is not None
        and action == history.prev_action
        and history.prev_reduction is not None
        and history.prev_reduction < REFINE_TOL
        and len(probs) > 1
    ):
        order = np.argsort(-probs, kind="stable")
        action = int(next(a for a in order if a != history.prev_action))
    return action


# -- checkpoints -----------------------------------------------------------

class CheckpointError(ValueError):
    pass


def _checksum(config_dict, flat):
    h = hashlib.sha256()
    h.update(json.dumps(config_dict, sort_keys=True).encode())
    h.update(np.ascontiguousarray(flat, dtype="<f8").tobytes())
    return h.hexdigest()


def save_checkpoint(path, params: PolicyParameters, extra: dict | None = None):
    cfg = params.config.to_dict()
    flat = params.flat()
    doc = {
        "format": "disentangler-checkpoint",
        "version": CHECKPOINT_VERSION,
        "config": cfg,
        "names": [[n, list(a.shape)] for n, a in params.arrays.items()],
        "params": flat.tolist(),
        "checksum": _checksum(cfg, flat),
        "extra": extra or {},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_checkpoint(path, expected_config: PolicyConfig | None = None) -> PolicyParameters:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != "disentangler-checkpoint":
        raise CheckpointError(f"{path} is not a checkpoint file")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {doc.get('version')}")
    flat = np.asarray(doc["params"], dtype=float)
    if _checksum(doc["config"], flat) != doc["checksum"]:
        raise CheckpointError("checkpoint checksum mismatch")
    config = PolicyConfig.from_dict(doc["config"])
    if expected_config is not None and config.to_dict() != expected_config.to_dict():
        raise CheckpointError(
            f"checkpoint config {config.to_dict()} does not match requested {expected_config.to_dict()}"
        )
    shapes = parameter_shapes(config)
    if [[n, list(s)] for n, s in shapes] != doc["names"]:
        raise CheckpointError("checkpoint parameter layout does not match its config")
    template = PolicyParameters(config, {n: np.zeros(s) for n, s in shapes})
    return template.with_flat(flat)
