"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints one row per kernel and qubit count with the median time per call for
each backend and the speedup. Also times a full environment step and a batch
of policy forward passes, which mix the kernels with numpy glue.
"""
import argparse
import os
import statistics
import subprocess
import sys
import time

import numpy as np

from disentangler import _pykernels

try:
    from disentangler import _ckernels
except ImportError:
    _ckernels = None


def median_time(fn, repeat, inner):
    samples = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        samples.append((time.perf_counter() - t0) / inner)
    return statistics.median(samples)


def kernel_cases(rng):
    for L in (4, 6, 8):
        psi = rng.normal(size=1 << L) + 1j * rng.normal(size=1 << L)
        psi /= np.linalg.norm(psi)
        q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
        gate = np.ascontiguousarray(q)
        yield "apply_gate_2q", L, lambda k, psi=psi, L=L, g=gate: k.apply_gate_2q(psi, L, 0, L - 1, g)
        yield "pair_rdms", L, lambda k, psi=psi, L=L: k.pair_rdms(psi, L)
        yield "single_rdms", L, lambda k, psi=psi, L=L: k.single_rdms(psi, L)
    for nq, batch in ((2, 32), (4, 32), (5, 128)):
        enc = rng.uniform(-np.pi, np.pi, size=(batch, nq))
        w = rng.normal(size=(batch, 3, nq, 2))
        yield f"pqc_expectations[b={batch}]", nq, lambda k, e=enc, w=w: k.pqc_expectations(e, w, False)


def end_to_end(backend):
    """Env steps and policy forwards timed in a subprocess pinned to one backend."""
    code = (
        "import time, numpy as np\n"
        "from disentangler.env import DisentangleEnv\n"
        "from disentangler.policy import PolicyConfig, init_parameters, actor_forward\n"
        "env = DisentangleEnv('RRRRRR'); rng = np.random.default_rng(0); env.reset(seed=rng)\n"
        "t = time.perf_counter(); n = 0\n"
        "while n < 2000:\n"
        "    env.step(int(rng.integers(15))); n += 1\n"
        "    if env.done: env.reset(seed=rng)\n"
        "step = (time.perf_counter() - t) / n\n"
        "p = init_parameters(PolicyConfig(4), 0); x = rng.normal(size=(32, p.config.input_dim))\n"
        "t = time.perf_counter()\n"
        "for _ in range(200): actor_forward(p, x, with_cache=False)\n"
        "fwd = (time.perf_counter() - t) / 200\n"
        "print(step, fwd)\n"
    )
    env = dict(os.environ)
    env.pop("DISENTANGLER_PURE_PYTHON", None)
    if backend == "python":
        env["DISENTANGLER_PURE_PYTHON"] = "1"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return [float(v) for v in out.stdout.split()]


def fmt(t):
    return f"{t * 1e6:10.1f} us"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=7)
    args = ap.parse_args(argv)
    if _ckernels is None:
        sys.exit("compiled extension not built; run `pip install -e . --no-build-isolation` first")
    rng = np.random.default_rng(0)
    print(f"{'kernel':28s} {'n':>3s} {'cython':>13s} {'numpy':>13s} {'speedup':>8s}")
    for name, n, call in kernel_cases(rng):
        ref, out = call(_pykernels), call(_ckernels)
        assert np.allclose(ref, out, atol=1e-12), name
        inner = max(1, int(2e-3 / max(median_time(lambda: call(_ckernels), 1, 1), 1e-7)))
        tc = median_time(lambda: call(_ckernels), args.repeat, inner)
        tp = median_time(lambda: call(_pykernels), args.repeat, inner)
        print(f"{name:28s} {n:3d} {fmt(tc)} {fmt(tp)} {tp / tc:7.1f}x")
    (sc, fc), (sp, fp) = end_to_end("cython"), end_to_end("python")
    print(f"{'env step (6 qubits)':28s} {'':3s} {fmt(sc)} {fmt(sp)} {sp / sc:7.1f}x")
    print(f"{'actor forward (batch 32)':28s} {'':3s} {fmt(fc)} {fmt(fp)} {fp / fc:7.1f}x")


if __name__ == "__main__":
    main()
