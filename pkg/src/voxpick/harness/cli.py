"""Command-line entry point.

Subcommands: demo-gen, train, eval, compare, replay. Every run writes a
run.json manifest carrying the config hash and seed; JSON artifacts embed
the same fields.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .. import baselines, boxes
from ..env import PickEnv
from ..rl import bc as bcmod
from ..rl import trainer as trainermod
from . import recordio
from .config import RunConfig
from .evaluate import AgentRunner, BtRunner, EvalReport, compare, evaluate

OBSERVE_FOR = {"proprio": "proprio", "depth": "depth", "voxel": "voxel",
               "voxel_only": "voxel"}


def _load_config(args):
    cfg = RunConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _write_manifest(out_dir, command, cfg):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "run.json").write_text(json.dumps({
        "command": command,
        "config": cfg.to_dict(),
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
    }, indent=1, sort_keys=True))


def _make_env(cfg, observe=None):
    scenario = cfg.scenario_file or str(default_scenario_path())
    return PickEnv(scenario, observe=observe or OBSERVE_FOR[cfg.modality])


def default_scenario_path():
    return Path(__file__).resolve().parent.parent / "scenarios" / "default.json"


def cmd_demo_gen(args):
    cfg = _load_config(args)
    out_dir = cfg.resolve_out_dir(args.out)
    _write_manifest(out_dir, "demo-gen", cfg)
    n = args.n or cfg.demos.get("n", 20)
    noise = cfg.demos.get("noise_sigma", 0.05)
    demo_seed = cfg.seed if args.seed is not None else cfg.demos.get("seed", cfg.seed)
    environment = _make_env(cfg, observe="both")
    demos = baselines.generate_demos(environment, n=n, noise_sigma=noise, seed=demo_seed)
    path = out_dir / "demos.jsonl"
    recordio.write_demos(path, demos)
    print(f"wrote {len(demos)} demo episodes to {path}")
    return 0


def _get_demos(cfg, args):
    path = getattr(args, "demos", None) or cfg.demos.get("file")
    if path:
        return recordio.read_demos(path)
    n = cfg.demos.get("n", 20)
    noise = cfg.demos.get("noise_sigma", 0.05)
    return baselines.generate_demos(
        _make_env(cfg, observe="both"), n=n, noise_sigma=noise,
        seed=cfg.demos.get("seed", cfg.seed),
    )


def cmd_train(args):
    cfg = _load_config(args)
    out_dir = cfg.resolve_out_dir(args.out)
    _write_manifest(out_dir, "train", cfg)
    demos = _get_demos(cfg, args)
    tcfg = cfg.trainer_config()
    environment = _make_env(cfg, observe=OBSERVE_FOR[tcfg.modality])
    result = trainermod.train(
        environment, tcfg, demos, seed=cfg.seed, out_dir=out_dir,
        resume_from=args.resume,
    )
    print(
        f"trained {result.steps} steps, {result.episodes} episodes, "
        f"{result.successes} successes; policy at {result.policy_path}"
    )
    return 0


def cmd_bc(args):
    cfg = _load_config(args)
    out_dir = cfg.resolve_out_dir(args.out)
    _write_manifest(out_dir, "bc", cfg)
    demos = _get_demos(cfg, args)
    policy, losses = bcmod.bc_fit(demos, epochs=args.epochs, seed=cfg.seed)
    path = out_dir / "policy_bc.npz"
    trainermod.save_policy(path, policy)
    print(f"behavioral cloning done ({losses[0]:.3f} -> {losses[-1]:.3f}); policy at {path}")
    return 0


def cmd_eval(args):
    cfg = _load_config(args)
    out_dir = cfg.resolve_out_dir(args.out)
    _write_manifest(out_dir, "eval", cfg)
    scenario_set = args.set or cfg.eval.get("scenario_set", "seen")
    n_trials = args.trials or cfg.eval.get("n_trials", 30)
    base_seed = cfg.eval.get("base_seed", 1000) if args.seed is None else args.seed

    if args.policy == "bt":
        runner = BtRunner()
        policy_id = "bt"
        environment = _make_env(cfg, observe="proprio")
    else:
        policy, meta = trainermod.load_policy(args.policy)
        if meta["kind"] == "sac":
            tcfg = policy.cfg
        else:
            from ..rl.sac import TrainerConfig

            tcfg = TrainerConfig(modality="proprio")  # BC observes proprioception
        runner = AgentRunner(policy, tcfg, ensembling=cfg.ensembling)
        policy_id = Path(args.policy).stem
        environment = _make_env(cfg, observe=OBSERVE_FOR[tcfg.modality])

    sink = None
    if args.log_trajectories or cfg.eval.get("log_trajectories"):
        sink = recordio.TrajectorySink(out_dir / "trajectories.jsonl")
    try:
        report = evaluate(
            environment, runner, n_trials=n_trials, base_seed=base_seed,
            scenario_set=scenario_set, policy_id=policy_id, trajectory_sink=sink,
        )
    finally:
        if sink is not None:
            sink.close()
    doc = report.to_dict()
    doc["config_hash"] = cfg.hash()
    doc["base_seed"] = base_seed
    report_path = out_dir / f"report_{policy_id}_{scenario_set}.json"
    report_path.write_text(json.dumps(doc, indent=1, sort_keys=True))
    print(
        f"{policy_id} on {scenario_set}: success {report.success_rate:.1f}% "
        f"reward {report.mean_reward:.1f}±{report.std_reward:.1f} "
        f"time {report.mean_time:.2f}±{report.std_time:.2f} s "
        f"smoothness {report.smoothness:.2f}  -> {report_path}"
    )
    return 0


def cmd_compare(args):
    reports = []
    for path in args.reports:
        doc = json.loads(Path(path).read_text())
        doc.pop("config_hash", None)
        doc.pop("base_seed", None)
        reports.append(EvalReport.from_dict(doc))
    text, csv = compare(reports)
    print(text)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "compare.txt").write_text(text + "\n")
        (out_dir / "compare.csv").write_text(csv + "\n")
        print(f"tables written to {out_dir}")
    return 0


def cmd_replay(args):
    written = recordio.render_trajectory(args.log, args.out, every=args.every)
    print(f"rendered {len(written)} frames to {args.out}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="voxpick",
        description="Suction-gripper box picking: training, baselines, evaluation.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="run config JSON")
        sp.add_argument("--seed", type=int, default=None, help="override config seed")
        sp.add_argument("--out", default=None, help="output directory")

    sp = sub.add_parser("demo-gen", help="generate scripted demonstrations")
    common(sp)
    sp.add_argument("--n", type=int, default=None, help="number of successful episodes")
    sp.set_defaults(fn=cmd_demo_gen)

    sp = sub.add_parser("train", help="train a policy")
    common(sp)
    sp.add_argument("--demos", default=None, help="demo JSONL (default: generate)")
    sp.add_argument("--resume", default=None, help="checkpoint to resume from")
    sp.set_defaults(fn=cmd_train)

    sp = sub.add_parser("bc", help="fit the behavioral-cloning baseline")
    common(sp)
    sp.add_argument("--demos", default=None)
    sp.add_argument("--epochs", type=int, default=200)
    sp.set_defaults(fn=cmd_bc)

    sp = sub.add_parser("eval", help="evaluate a policy on seeded trials")
    common(sp)
    sp.add_argument("--policy", required=True, help="policy .npz path, or 'bt'")
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--set", choices=("seen", "unseen"), default=None)
    sp.add_argument("--log-trajectories", action="store_true")
    sp.set_defaults(fn=cmd_eval)

    sp = sub.add_parser("compare", help="tabulate evaluation reports")
    sp.add_argument("reports", nargs="+", help="report JSON paths")
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=cmd_compare)

    sp = sub.add_parser("replay", help="render a trajectory log to image frames")
    sp.add_argument("--log", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--every", type=int, default=1)
    sp.set_defaults(fn=cmd_replay)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.fn(args)
    except (FileNotFoundError, ValueError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
