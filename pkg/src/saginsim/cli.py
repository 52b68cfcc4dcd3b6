"""Command-line entry point.

Verbs:
    train     train the diffusion policy, one output subdirectory per seed
    eval      roll out a trained checkpoint without updates
    baseline  run the random or greedy reference policy
    export    regenerate trajectory/energy CSVs from an events.jsonl
    sweep     train across denoising-step or serving-capacity grids

Every run writes manifest.json and the resolved scenario next to its
outputs, so a run can be reproduced from the output directory alone.
Overrides use dotted config keys (e.g. --override workload.task_rate=0.2);
keys under hyper. steer the trainer (e.g. --override hyper.batch_size=64).
"""

import argparse
import dataclasses
import os
import sys
import traceback

from . import runio
from .baselines import run_baseline
from .environment import SaginEnv
from .errors import SaginError
from .nets.mlp import load_checkpoint
from .scenario import (_parse_value, load_scenario, scenario_from_doc,
                       scenario_to_text)
from .trainer import Hyper, QagobTrainer, train

DENOISE_GRID = (1, 5, 10, 15, 25)
CAPACITY_GRID = (2, 3, 4, 5, 6)


def _parse_overrides(pairs):
    overrides = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise SaginError("override %r is not key=value" % pair)
        key, _, value = pair.partition("=")
        overrides[key.strip()] = value.strip()
    return overrides


def _split_hyper(overrides):
    scenario_ov, hyper_ov = {}, {}
    for key, value in overrides.items():
        if key.startswith("hyper."):
            hyper_ov[key[len("hyper."):]] = value
        else:
            scenario_ov[key] = value
    return scenario_ov, hyper_ov


def _build_hyper(hyper_ov, episodes=None):
    kwargs = {}
    fields = {f.name: f for f in dataclasses.fields(Hyper)}
    for key, raw in hyper_ov.items():
        if key not in fields:
            raise SaginError("unknown hyper field %r" % key)
        default = fields[key].default
        if isinstance(default, bool):
            kwargs[key] = raw.lower() == "true"
        elif isinstance(default, int):
            kwargs[key] = int(raw)
        elif isinstance(default, float):
            kwargs[key] = float(raw)
        elif isinstance(default, tuple) or key in ("critic_widths", "actor_widths"):
            kwargs[key] = tuple(int(x) for x in raw.strip("[]()").split(",") if x)
        else:
            kwargs[key] = raw
    if episodes is not None:
        kwargs["episodes"] = episodes
    return Hyper(**kwargs)


def _load(args, seed):
    overrides = _parse_overrides(args.override)
    scenario_ov, hyper_ov = _split_hyper(overrides)
    if args.mode:
        scenario_ov["reward.mode"] = '"%s"' % args.mode
    if args.config:
        scenario = load_scenario(args.config, scenario_ov, seed=seed)
    else:
        doc = {"": {"seed": int(seed) if seed is not None else 0}}
        for dotted, raw in scenario_ov.items():
            sec, _, key = dotted.rpartition(".")
            doc.setdefault(sec, {})[key] = _parse_value(str(raw), 0)
        scenario = scenario_from_doc(doc)
    return scenario, overrides, hyper_ov


def _manifest(args, command, seeds, overrides):
    return {
        "command": command,
        "scenario_path": os.path.abspath(args.config) if args.config else None,
        "algo": getattr(args, "algo", None) or command,
        "seeds": seeds,
        "mode": args.mode or "joint",
        "episodes": getattr(args, "episodes", None),
        "overrides": overrides,
        "out": os.path.abspath(args.out),
    }


def _write_run_outputs(seed_dir, rows, episode_records):
    runio.write_metrics_csv(os.path.join(seed_dir, "metrics.csv"), rows)
    flat = []
    for episode, records in episode_records:
        for rec in records:
            out = dict(rec)
            out["episode"] = episode
            flat.append(out)
    runio.write_events_jsonl(os.path.join(seed_dir, "events.jsonl"),
                             {"episodes": len(episode_records)},
                             episode_records)
    if flat:
        runio.export_trajectories(flat, os.path.join(seed_dir, "trajectories.csv"))
        runio.export_energy_breakdown(flat, os.path.join(seed_dir, "energy.csv"))


def _seed_list(arg):
    return [int(s) for s in str(arg).split(",") if s != ""]


def cmd_train(args):
    seeds = _seed_list(args.seed)
    failures = 0
    for seed in seeds:
        scenario, overrides, hyper_ov = _load(args, seed)
        hyper = _build_hyper(hyper_ov, args.episodes)
        seed_dir = runio.ensure_dir(os.path.join(args.out, "seed%d" % seed))
        if seed == seeds[0]:
            runio.write_manifest(os.path.join(args.out, "manifest.json"),
                                 _manifest(args, "train", seeds, overrides))
            with open(os.path.join(args.out, "config.resolved.toml"), "w",
                      encoding="utf-8") as fh:
                fh.write(scenario_to_text(scenario))
        ckpt_dir = runio.ensure_dir(os.path.join(seed_dir, "checkpoints"))
        records = []
        rows = []      # filled via callback so a crash still leaves a report
        try:
            train(scenario, hyper, seed, on_episode=rows.append,
                  ckpt_dir=ckpt_dir, log_records=records,
                  progress=not args.quiet)
        except Exception:
            traceback.print_exc()
            failures += 1
        finally:
            if rows:
                _write_run_outputs(seed_dir, rows, records)
    return 1 if failures else 0


def cmd_eval(args):
    seeds = _seed_list(args.seed)
    failures = 0
    for seed in seeds:
        scenario, overrides, hyper_ov = _load(args, seed)
        hyper = _build_hyper(hyper_ov)
        seed_dir = runio.ensure_dir(os.path.join(args.out, "seed%d" % seed))
        if seed == seeds[0]:
            runio.write_manifest(os.path.join(args.out, "manifest.json"),
                                 _manifest(args, "eval", seeds, overrides))
            with open(os.path.join(args.out, "config.resolved.toml"), "w",
                      encoding="utf-8") as fh:
                fh.write(scenario_to_text(scenario))
        try:
            env = SaginEnv(scenario, seed)
            nets, meta = load_checkpoint(args.checkpoint)
            arch = meta.get("arch")
            if arch:
                # nets must be rebuilt exactly as trained, whatever the
                # current defaults are
                hyper = dataclasses.replace(
                    hyper,
                    actor_widths=tuple(arch["actor_widths"]),
                    critic_widths=tuple(arch["critic_widths"]),
                    n_denoise=int(arch["n_denoise"]),
                    beta_start=float(arch["beta_start"]),
                    beta_end=float(arch["beta_end"]))
            agent = QagobTrainer(env, hyper, seed)
            agent.policy.denoiser.set_arrays(nets["actor"].get_arrays())
            agent.critics.q1.set_arrays(nets["q1"].get_arrays())
            agent.critics.q2.set_arrays(nets["q2"].get_arrays())
            rows, records = [], []
            for episode in range(args.episodes):
                state = env.reset()
                done, ep_reward = False, 0.0
                while not done:
                    action = agent.select_action(state)
                    state, reward, done, _ = env.step(action)
                    ep_reward += reward
                rows.append(runio.episode_metrics(env, episode, ep_reward))
                records.append((episode, env.records))
            _write_run_outputs(seed_dir, rows, records)
        except Exception:
            traceback.print_exc()
            failures += 1
    return 1 if failures else 0


def cmd_baseline(args):
    seeds = _seed_list(args.seed)
    failures = 0
    for seed in seeds:
        scenario, overrides, _ = _load(args, seed)
        seed_dir = runio.ensure_dir(os.path.join(args.out, "seed%d" % seed))
        if seed == seeds[0]:
            runio.write_manifest(os.path.join(args.out, "manifest.json"),
                                 _manifest(args, "baseline", seeds, overrides))
            with open(os.path.join(args.out, "config.resolved.toml"), "w",
                      encoding="utf-8") as fh:
                fh.write(scenario_to_text(scenario))
        try:
            records = []
            rows = run_baseline(scenario, args.algo, seed, args.episodes,
                                log_records=records)
            _write_run_outputs(seed_dir, rows, records)
        except Exception:
            traceback.print_exc()
            failures += 1
    return 1 if failures else 0


def cmd_export(args):
    _, records = runio.read_events_jsonl(args.events)
    out = runio.ensure_dir(args.out)
    runio.export_trajectories(records, os.path.join(out, "trajectories.csv"))
    runio.export_energy_breakdown(records, os.path.join(out, "energy.csv"))
    return 0


def cmd_sweep(args):
    seeds = _seed_list(args.seed)
    grid = DENOISE_GRID if args.kind == "denoise" else CAPACITY_GRID
    summary = []
    failures = 0
    base_overrides = _parse_overrides(args.override)
    runio.ensure_dir(args.out)
    runio.write_manifest(os.path.join(args.out, "manifest.json"),
                         _manifest(args, "sweep", seeds, base_overrides))
    for value in grid:
        for seed in seeds:
            label = "%s%d" % (args.kind, value)
            sub = argparse.Namespace(**vars(args))
            sub.override = list(args.override or [])
            if args.kind == "denoise":
                sub.override.append("hyper.n_denoise=%d" % value)
            else:
                sub.override.append("max_served=%d" % value)
            scenario, _, hyper_ov = _load(sub, seed)
            hyper = _build_hyper(hyper_ov, args.episodes)
            seed_dir = runio.ensure_dir(
                os.path.join(args.out, label, "seed%d" % seed))
            records, rows = [], []
            try:
                rows, _ = train(scenario, hyper, seed, ckpt_dir=None,
                                log_records=records, progress=not args.quiet)
                _write_run_outputs(seed_dir, rows, records)
                tail = rows[-min(10, len(rows)):]
                summary.append({
                    "sweep": args.kind, "value": value, "seed": seed,
                    "reward_tail10": sum(r["reward"] for r in tail) / len(tail),
                    "f1": rows[-1]["f1"], "f2": rows[-1]["f2"],
                    "f3": rows[-1]["f3"],
                })
            except Exception:
                traceback.print_exc()
                failures += 1
    if summary:
        runio.write_metrics_csv(os.path.join(args.out, "summary.csv"), summary)
    return 1 if failures else 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="saginsim",
        description="satellite-AAV edge computing / data collection simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, episodes_default):
        p.add_argument("--config", default=None, help="scenario config path")
        p.add_argument("--seed", default="0", help="seed or comma list")
        p.add_argument("--mode", default=None,
                       choices=["joint", "mec_only", "dc_only"])
        p.add_argument("--episodes", type=int, default=episodes_default)
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--override", action="append", default=[],
                       metavar="KEY=VALUE")
        p.add_argument("--quiet", action="store_true")

    p_train = sub.add_parser("train", help="train the diffusion policy")
    common(p_train, 3000)
    p_train.set_defaults(func=cmd_train, algo="qagob")

    p_eval = sub.add_parser("eval", help="roll out a checkpoint")
    common(p_eval, 5)
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.set_defaults(func=cmd_eval, algo="qagob")

    p_base = sub.add_parser("baseline", help="run a reference policy")
    common(p_base, 1)
    p_base.add_argument("--algo", required=True, choices=["random", "greedy"])
    p_base.set_defaults(func=cmd_baseline)

    p_exp = sub.add_parser("export", help="re-export plots data from a log")
    p_exp.add_argument("--events", required=True)
    p_exp.add_argument("--out", required=True)
    p_exp.set_defaults(func=cmd_export)

    p_sweep = sub.add_parser("sweep", help="grid over denoise steps or capacity")
    common(p_sweep, 10)
    p_sweep.add_argument("--kind", required=True,
                         choices=["denoise", "capacity"])
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SaginError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
