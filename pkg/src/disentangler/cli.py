"""Command-line entry point: train, eval, trace, sweep.

Worker count for evaluation comes from ``DISENTANGLER_WORKERS`` (default 1).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, config_from_dict, default_config, load_config, set_path
from .env import SUMMARY_COLUMNS, DisentangleEnv, pair_to_action
from .policy import (
    ActionHistory,
    CheckpointError,
    count_parameters,
    forward,
    init_parameters,
    load_checkpoint,
    save_checkpoint,
    select_action,
)
from .qsim import PatternError, Statevector, parse_pattern
from .runio import OutputExistsError, RunManifest, write_csv
from .trainer import (
    ABSENT,
    ENTROPY_COLUMNS,
    EVAL_COLUMNS,
    METRIC_COLUMNS,
    REPORT_COLUMNS,
    evaluate,
    train,
)

log = logging.getLogger("disentangler")

TABLE_COLUMNS = ["head", "pqc_qubits", "pqc_depth", "success_pct", "avg_gates", "gate_std", "param_count"]
SWEEP_COLUMNS = [
    "axis",
    "value",
    "head",
    "pqc_qubits",
    "pqc_depth",
    "param_count",
    "success_rate",
    "avg_gates",
    "gate_std",
    "status",
    "error",
]
HIST_COLUMNS = ["pattern", "state", "final_mean_entropy", "success", "gate_count"]
SWEEP_AXES = ("pqc.qubits", "pqc.layers", "policy.head")
GRIDS = {
    # head ablation: classical head, then hybrid (qubits, depth) around the 4x3 default
    "ablation": [("mlp", None, None), ("hybrid", 2, 3), ("hybrid", 3, 3), ("hybrid", 4, 2),
               ("hybrid", 4, 3), ("hybrid", 4, 4), ("hybrid", 5, 3)],
    "full": [("mlp", None, None)] + [("hybrid", q, d) for q in (2, 3, 4, 5) for d in (2, 3, 4)],
}


def _workers():
    try:
        return max(1, int(os.environ.get("DISENTANGLER_WORKERS", "1")))
    except ValueError:
        return 1


def _table_row(cfg: RunConfig, metrics, params) -> dict:
    hybrid = cfg.policy.head == "hybrid"
    m = metrics
    return {
        "head": "Hybrid head" if hybrid else "MLP head",
        "pqc_qubits": cfg.policy.pqc.num_qubits if hybrid else ABSENT,
        "pqc_depth": cfg.policy.pqc.num_layers if hybrid else ABSENT,
        "success_pct": round(100.0 * m.success_rate, 2) if m.success_rate is not None else ABSENT,
        "avg_gates": round(m.avg_gates, 2) if m.avg_gates is not None else ABSENT,
        "gate_std": round(m.gate_std, 2) if m.gate_std is not None else ABSENT,
        "param_count": count_parameters(params)["total"],
    }


def _hist_rows(metrics):
    rows = []
    for m in metrics:
        for s, (e, ok, g) in enumerate(zip(m.final_entropies, m.successes, m.gate_counts)):
            rows.append({"pattern": m.pattern, "state": s, "final_mean_entropy": e, "success": int(ok), "gate_count": g})
    return rows


def _train_one(cfg: RunConfig, seed):
    params = init_parameters(cfg.policy, np.random.default_rng([seed, 1]))
    return train(params, cfg.patterns, cfg.train, cfg.max_budget, cfg.epsilon)


def _env_extra(cfg: RunConfig):
    return {"patterns": cfg.patterns, "max_budget": cfg.max_budget, "epsilon": cfg.epsilon}


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = config_from_dict(set_path(cfg.raw, "train.seed", args.seed))
    man = RunManifest(args.out, "train", cfg.to_dict(), cfg.train.seed, sys.argv, args.force)
    params, report = _train_one(cfg, cfg.train.seed)
    save_checkpoint(man.output("checkpoint.json"), params, _env_extra(cfg))
    write_csv(man.output("train_report.csv"), report.rows, REPORT_COLUMNS)
    write_csv(
        man.output("train_timing.csv"),
        [{"update": r["update"], "wall_clock_s": t} for r, t in zip(report.rows, report.wall_clock)],
        ["update", "wall_clock_s"],
    )
    write_csv(man.output("eval_history.csv"), report.eval_rows, EVAL_COLUMNS)
    write_csv(man.output("entropy_history.csv"), report.entropy_rows, ENTROPY_COLUMNS)
    final = evaluate(
        params, cfg.patterns[:1], cfg.train.eval_states, cfg.train.eval_seed, True,
        cfg.max_budget, cfg.epsilon, workers=_workers(),
    )[0]
    row = _table_row(cfg, final, params)
    write_csv(man.output("table_row.csv"), [row], TABLE_COLUMNS)
    print(",".join(str(row[c]) for c in TABLE_COLUMNS))
    return 0 if man.finish("ok") else 1


def _load_for_eval(args):
    expected = load_config(args.config).policy if getattr(args, "config", None) else None
    params = load_checkpoint(args.checkpoint, expected)
    with open(args.checkpoint) as fh:
        extra = json.load(fh).get("extra", {})
    return params, extra


def cmd_eval(args) -> int:
    params, extra = _load_for_eval(args)
    patterns = args.patterns.split(",") if args.patterns else extra.get("patterns", [])
    patterns = [parse_pattern(p.strip()) for p in patterns if p.strip()]
    for p in patterns:
        if p.num_qubits != params.config.num_qubits:
            raise CheckpointError(
                f"pattern {p.label} has {p.num_qubits} qubits, checkpoint expects {params.config.num_qubits}"
            )
    seed = 2024 if args.seed is None else args.seed
    n = 500 if args.n_states is None else args.n_states
    if n < 0:
        raise ConfigError(["--n-states must be >= 0"])
    man = RunManifest(
        args.out, "eval", {"checkpoint": str(args.checkpoint), "patterns": [p.label for p in patterns],
                           "n_states": n, "refinement": not args.no_refinement, **extra}, seed, sys.argv, args.force,
    )
    metrics = evaluate(
        params, [p.label for p in patterns], n, seed, not args.no_refinement,
        extra.get("max_budget", 128), extra.get("epsilon", 1e-3), workers=_workers(),
    )
    write_csv(man.output("metrics.csv"), [m.row() for m in metrics], METRIC_COLUMNS)
    write_csv(man.output("entropy_hist.csv"), _hist_rows(metrics), HIST_COLUMNS)
    for m in metrics:
        print(",".join(str(m.row()[c]) for c in METRIC_COLUMNS))
    return 0 if man.finish("ok") else 1


def _parse_actions(text, num_qubits):
    actions = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if "-" in tok:
            i, j = (int(v) for v in tok.split("-"))
            actions.append(pair_to_action((i, j), num_qubits))
        else:
            actions.append(int(tok))
    return actions


def cmd_trace(args) -> int:
    params = extra = None
    if args.checkpoint:
        params, extra = _load_for_eval(args)
    elif not args.actions:
        raise ConfigError(["trace needs --checkpoint or --actions"])
    extra = extra or {}
    state = None
    if args.state_file:
        state = Statevector.from_json(Path(args.state_file).read_text())
        num_qubits = state.num_qubits
        label = args.pattern or "custom"
    else:
        label = args.pattern or (extra.get("patterns") or [None])[0]
        if label is None:
            raise ConfigError(["trace needs --pattern or --state-file"])
        num_qubits = parse_pattern(label).num_qubits
    if params is not None and params.config.num_qubits != num_qubits:
        raise CheckpointError(f"checkpoint expects {params.config.num_qubits} qubits, trace has {num_qubits}")
    budget = args.max_budget or extra.get("max_budget", 128)
    seed = 0 if args.seed is None else args.seed
    man = RunManifest(
        args.out, "trace", {"checkpoint": args.checkpoint, "pattern": label, "actions": args.actions,
                            "state_file": args.state_file, "max_budget": budget}, seed, sys.argv, args.force,
    )
    env = DisentangleEnv([label] if state is None else ["R" * num_qubits], budget, extra.get("epsilon", 1e-3))
    obs = env.reset_from_state(state, label) if state is not None else env.reset(label, seed)
    scripted = _parse_actions(args.actions, num_qubits) if args.actions else None
    history = ActionHistory()
    t = 0
    while not env.done:
        if scripted is not None:
            if t >= len(scripted):
                break
            a = scripted[t]
        else:
            a = select_action(forward(obs, params), "greedy", True, history)
        before = env.entropies
        out = env.step(a)
        history.update(a, before, out.per_qubit_entropy)
        obs = out.next_observation
        t += 1
    record = env.record
    man.output("trace.jsonl").write_text(record.to_jsonl())
    write_csv(man.output("trace_summary.csv"), [record.summary_row()], SUMMARY_COLUMNS)
    print(f"steps={record.gate_count} success={record.success} final_mean_entropy={record.final_mean_entropy:.3e}")
    return 0 if man.finish("ok") else 1


def _sweep_points(args, base: dict):
    if args.grid:
        points = []
        for head, q, d in GRIDS[args.grid]:
            raw = set_path(base, "policy.head", head)
            if head == "hybrid":
                raw = set_path(set_path(raw, "pqc.qubits", q), "pqc.layers", d)
            points.append(("grid:" + args.grid, head if head == "mlp" else f"{q}Q{d}L", raw))
        return points
    if args.axis not in SWEEP_AXES:
        raise ConfigError([f"--axis must be one of {SWEEP_AXES}, got {args.axis!r}"])
    values = [v.strip() for v in (args.values or "").split(",") if v.strip()]
    if not values:
        raise ConfigError(["--values must list at least one value"])
    points = []
    for v in values:
        value = v if args.axis == "policy.head" else int(v)
        points.append((args.axis, value, set_path(base, args.axis, value)))
    return points


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    base = cfg.to_dict()
    if args.seed is not None:
        base = set_path(base, "train.seed", args.seed)
    points = _sweep_points(args, base)
    for _, _, raw in points:
        config_from_dict(raw)  # validate every point before training any
    man = RunManifest(args.out, "sweep", {"base": base, "axis": args.axis, "values": args.values, "grid": args.grid},
                      get_seed(base), sys.argv, args.force)
    rows = []
    ok_all = True
    for axis, value, raw in points:
        run = config_from_dict(raw)
        hybrid = run.policy.head == "hybrid"
        row = {
            "axis": axis,
            "value": value,
            "head": run.policy.head,
            "pqc_qubits": run.policy.pqc.num_qubits if hybrid else ABSENT,
            "pqc_depth": run.policy.pqc.num_layers if hybrid else ABSENT,
            "param_count": count_parameters(run.policy)["total"],
        }
        try:
            params, _ = _train_one(run, run.train.seed)
            n = args.n_states if args.n_states is not None else run.train.eval_states
            m = evaluate(params, run.patterns[:1], n, run.train.eval_seed, True, run.max_budget, run.epsilon,
                         workers=_workers())[0]
            r = m.row()
            row.update(success_rate=r["success_rate"], avg_gates=r["avg_gates"], gate_std=r["gate_std"], status="ok")
        except Exception as exc:  # a failed point is recorded, the sweep goes on
            log.exception("sweep point %s=%s failed", axis, value)
            ok_all = False
            row.update(success_rate=ABSENT, avg_gates=ABSENT, gate_std=ABSENT, status="failed", error=repr(exc))
        rows.append(row)
        print(",".join(str(row.get(c, "")) for c in SWEEP_COLUMNS), flush=True)
    write_csv(man.output("sweep.csv"), rows, SWEEP_COLUMNS)
    return 0 if man.finish("ok" if ok_all else "partial") and ok_all else 1


def get_seed(raw):
    return raw["train"]["seed"]


def cmd_config(args) -> int:
    import yaml

    print(yaml.safe_dump(default_config(), sort_keys=False), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="disentangler",
        description=__doc__.splitlines()[0],
        epilog="environment: DISENTANGLER_WORKERS=N evaluates in N processes (default 1); "
        "DISENTANGLER_PURE_PYTHON=1 uses the numpy kernels instead of the compiled ones.",
    )
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed_help="random seed"):
        sp.add_argument("--seed", type=int, default=None, help=seed_help)
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--force", action="store_true", help="overwrite an existing run in --out")

    t = sub.add_parser("train", help="train a policy; writes checkpoint and report CSVs")
    t.add_argument("--config", required=True, help="YAML or JSON run config")
    common(t, "training seed (overrides train.seed)")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="greedy evaluation of a checkpoint")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--config", help="if given, the checkpoint must match its policy section")
    e.add_argument("--patterns", help="comma list of pattern labels, e.g. RRRRRR,RR-RR-RR")
    e.add_argument("--n-states", type=int, default=None, help="initial states per pattern (default 500)")
    e.add_argument("--no-refinement", action="store_true", help="disable the repeated-pair refinement")
    common(e, "evaluation-set seed (default 2024)")
    e.set_defaults(func=cmd_eval)

    tr = sub.add_parser("trace", help="log one episode step by step (JSON lines)")
    tr.add_argument("--checkpoint")
    tr.add_argument("--config", help="if given, the checkpoint must match its policy section")
    tr.add_argument("--pattern", help="initial-state pattern label")
    tr.add_argument("--state-file", help="start from a statevector JSON file instead of a sampled state")
    tr.add_argument("--actions", help="scripted pairs, e.g. '0-1,1-2' or action indices '0,3'; bypasses the policy")
    tr.add_argument("--max-budget", type=int, default=None)
    common(tr, "initial-state seed (default 0)")
    tr.set_defaults(func=cmd_trace)

    s = sub.add_parser("sweep", help="train+evaluate one run per value of a config axis")
    s.add_argument("--config", required=True)
    s.add_argument("--axis", help=f"one of {', '.join(SWEEP_AXES)}")
    s.add_argument("--values", help="comma list of axis values")
    s.add_argument("--grid", choices=sorted(GRIDS), help="preset head x qubits x depth grid instead of --axis")
    s.add_argument("--n-states", type=int, default=None, help="evaluation states per run (default train.eval_states)")
    common(s, "training seed for every run (overrides train.seed)")
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("default-config", help="print the default config")
    c.set_defaults(func=cmd_config)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "sweep" and not args.grid and not args.axis:
        parser.error("sweep needs --axis/--values or --grid")
    try:
        return args.func(args)
    except (ConfigError, PatternError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CheckpointError, OutputExistsError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
