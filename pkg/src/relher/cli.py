"""Command line entry point.

Subcommands: train, evaluate, lift-goals, relabel, generate-instances,
inspect. Configuration precedence is defaults < --config file < flags;
the effective configuration is written next to a run's outputs. The
RELHER_LOG environment variable sets the log level.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import shutil
import sys
from pathlib import Path

from .errors import RelherError
from .refine import VARIANTS


def existing_file(path):
    if not os.path.isfile(path):
        raise argparse.ArgumentTypeError(f"file not found: {path}")
    return Path(path)


def existing_dir(path):
    if not os.path.isdir(path):
        raise argparse.ArgumentTypeError(f"directory not found: {path}")
    return Path(path)


def size_range(text):
    try:
        lo, _, hi = text.partition(":")
        lo, hi = int(lo), int(hi or lo)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected SIZE or LO:HI, got {text!r}") from None
    if lo < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"bad size range {text!r}")
    return lo, hi


def build_parser():
    parser = argparse.ArgumentParser(
        prog="relher",
        description="Learn and evaluate goal-conditioned policies for "
                    "STRIPS planning domains.")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="train a Q-network with hindsight "
                                         "relabeling")
    train.add_argument("--domain", type=existing_file, required=True)
    train.add_argument("--instances", type=existing_dir, required=True,
                       help="directory of training problems (or with "
                            "train/ and val/ subdirectories)")
    train.add_argument("--val-instances", type=existing_dir,
                       help="overrides the validation problem directory")
    train.add_argument("--her", choices=VARIANTS)
    train.add_argument("--episodes", type=int)
    train.add_argument("--seed", type=int)
    train.add_argument("--out", required=True)
    train.add_argument("--layers", type=int)
    train.add_argument("--width", type=int)
    train.add_argument("--horizon", type=int, dest="rollout_horizon")
    train.add_argument("--optimizer", choices=("adam", "sgd"))
    train.add_argument("--eval-period", type=int, dest="eval_period")
    train.add_argument("--threads", type=int, default=1)
    train.add_argument("--config", type=existing_file,
                       help="JSON file with TrainerConfig fields")

    ev = sub.add_parser("evaluate", help="greedy evaluation of a checkpoint")
    ev.add_argument("--checkpoint", type=existing_file, required=True)
    ev.add_argument("--domain", type=existing_file, required=True)
    ev.add_argument("--instances", type=existing_dir, required=True)
    ev.add_argument("--out", help="directory for report.csv/summary.csv")
    ev.add_argument("--max-steps", type=int, default=1000)
    ev.add_argument("--no-cycle-avoidance", action="store_true")
    ev.add_argument("--threads", type=int, default=1)

    lift = sub.add_parser("lift-goals", help="print a problem's lifted goal "
                                             "schemas")
    lift.add_argument("--domain", type=existing_file, required=True)
    lift.add_argument("--problem", type=existing_file, required=True)
    lift.add_argument("--state", type=existing_file,
                      help="file of atoms (one per line) to ground against")
    lift.add_argument("--cap", type=int, default=12)

    rel = sub.add_parser("relabel", help="relabel a trajectory dump")
    rel.add_argument("--domain", type=existing_file, required=True)
    rel.add_argument("--problem", type=existing_file, required=True)
    rel.add_argument("--trajectories", type=existing_file, required=True)
    rel.add_argument("--her", choices=("state", "prop", "lifted"),
                     required=True)
    rel.add_argument("--seed", type=int,
                     help="randomize grounding choices for lifted relabeling")

    gen = sub.add_parser("generate-instances", help="write instance files "
                                                    "for a built-in family")
    gen.add_argument("--family", choices=("blocks", "gripper", "maze"),
                     required=True)
    gen.add_argument("--out", required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--train", type=size_range, required=True,
                     metavar="LO:HI")
    gen.add_argument("--val", type=size_range, metavar="LO:HI")
    gen.add_argument("--test", type=size_range, metavar="LO:HI")
    gen.add_argument("--count", type=int, default=1,
                     help="instances per size")

    ins = sub.add_parser("inspect", help="pretty-print a trajectory dump")
    ins.add_argument("--trajectories", type=existing_file, required=True)
    return parser


def _load_problems(directory, domain):
    from .parser import load_problem

    files = sorted(Path(directory).glob("*.strips"))
    return [load_problem(f, domain) for f in files
            if not f.name.startswith("domain")]


def cmd_train(args):
    from .parser import load_domain
    from .trainer import Trainer, TrainerConfig, select_checkpoint

    overrides = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            overrides.update(json.load(fh))
    for name in ("her", "episodes", "seed", "layers", "width",
                 "rollout_horizon", "optimizer", "eval_period"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    known = {f.name for f in dataclasses.fields(TrainerConfig)}
    unknown = set(overrides) - known
    if unknown:
        raise RelherError(f"unknown config fields: {sorted(unknown)}")
    cfg = TrainerConfig(**overrides)

    domain = load_domain(args.domain)
    train_dir = args.instances
    val_dir = args.val_instances
    if (train_dir / "train").is_dir():
        if val_dir is None and (train_dir / "val").is_dir():
            val_dir = train_dir / "val"
        train_dir = train_dir / "train"
    train_problems = _load_problems(train_dir, domain)
    if not train_problems:
        raise RelherError(f"no .strips problems in {train_dir}")
    val_problems = _load_problems(val_dir, domain) if val_dir else []

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    effective = dataclasses.asdict(cfg)
    effective.update({
        "domain": str(args.domain),
        "instances": str(train_dir),
        "val_instances": str(val_dir) if val_dir else None,
        "out": str(out),
        "threads": args.threads,
    })
    with open(out / "config.json", "w", encoding="utf-8") as fh:
        json.dump(effective, fh, indent=2, sort_keys=True)
        fh.write("\n")

    trainer = Trainer(train_problems, cfg, val_problems=val_problems,
                      out_dir=out)
    stats, best = trainer.run(metrics_path=out / "metrics.csv")
    if best is not None and best.path:
        shutil.copyfile(best.path, out / "best.ckpt")
        shutil.copyfile(best.path + ".json", out / "best.ckpt.json")
        print(f"best checkpoint: episode {best.episode} "
              f"(coverage {best.coverage}, total length {best.total_length})")
    print(f"wrote {out / 'metrics.csv'}")
    return 0


def cmd_evaluate(args):
    import numpy as np

    from .evalbench import EvalConfig, evaluate, format_table, \
        write_report_csv, write_summary_csv
    from .parser import load_domain
    from .qnet import Vocabulary, load_checkpoint

    domain = load_domain(args.domain)
    problems = _load_problems(args.instances, domain)
    if not problems:
        raise RelherError(f"no .strips problems in {args.instances}")
    net = load_checkpoint(args.checkpoint, Vocabulary.from_domain(domain),
                          dtype=np.float32)
    cfg = EvalConfig(max_steps=args.max_steps,
                     cycle_avoidance=not args.no_cycle_avoidance)
    report = evaluate(net, problems, cfg, threads=args.threads)
    print(format_table(report))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_report_csv(report, out / "report.csv")
        write_summary_csv(report, out / "summary.csv")
        print(f"wrote {out / 'report.csv'}")
    return 0


def cmd_lift_goals(args):
    from .lifting import enumerate_lifted_goals, ground_schema, grounded_atoms
    from .parser import load_domain, load_problem

    domain = load_domain(args.domain)
    problem = load_problem(args.problem, domain)
    schemas = enumerate_lifted_goals(problem.goal, cap=args.cap)
    print(f"{len(schemas)} lifted goal schemas for {problem.name}:")
    state = None
    if args.state:
        with open(args.state, encoding="utf-8") as fh:
            state = frozenset(problem.parse_atom(line)
                              for line in fh if line.strip())
    for schema in schemas:
        print(f"  {schema.format(domain)}")
        if state is not None:
            assignment = ground_schema(schema, state)
            if assignment is None:
                print("    grounding: none")
            else:
                atoms = sorted(problem.format_atom(a) for a in
                               grounded_atoms(schema, assignment))
                print(f"    grounding: {' & '.join(atoms)}")
    return 0


def cmd_relabel(args):
    import numpy as np

    from .env import load_trajectories
    from .parser import load_domain, load_problem
    from .refine import make_variant, refine

    domain = load_domain(args.domain)
    problem = load_problem(args.problem, domain)
    variant = make_variant(args.her, problem)
    rng = np.random.default_rng(args.seed) if args.seed is not None else None
    with open(args.trajectories, encoding="utf-8") as fh:
        trajectories = load_trajectories(fh, problem)
    for ep, traj in enumerate(trajectories):
        pieces = refine(variant, traj, problem, rng)
        reached = "yes" if traj.achieved_goal else "no"
        print(f"trajectory {ep}: {len(traj)} steps, "
              f"original goal reached: {reached}, "
              f"{len(pieces)} relabeled slice(s)")
        for piece in pieces:
            goal = " & ".join(sorted(problem.format_atom(a)
                                     for a in piece.goal))
            print(f"  [{piece.start}..{piece.end}] goal: {goal}")
    return 0


def cmd_generate(args):
    from .generators import domain_text, generate_instances
    from .parser import print_problem

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "domain.strips").write_text(domain_text(args.family),
                                       encoding="utf-8")
    splits = [("train", args.train)]
    if args.val:
        splits.append(("val", args.val))
    if args.test:
        splits.append(("test", args.test))
    for split, bounds in splits:
        directory = out / split
        directory.mkdir(exist_ok=True)
        problems = generate_instances(args.family, bounds, args.seed,
                                      count_per_size=args.count)
        for i, problem in enumerate(problems):
            path = directory / f"p{i:03d}_{problem.name}.strips"
            path.write_text(print_problem(problem), encoding="utf-8")
        print(f"{split}: {len(problems)} instance(s) in {directory}")
    return 0


def cmd_inspect(args):
    with open(args.trajectories, encoding="utf-8") as fh:
        episode = None
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            if row["episode"] != episode:
                episode = row["episode"]
                goal = " & ".join(row["goal"])
                print(f"episode {episode} ({row['problem']}), goal: {goal}")
            flag = "  terminal" if row["terminal"] else ""
            print(f"  {row['t']:>4}  {row['action']}  r={row['reward']}{flag}")
    return 0


COMMANDS = {
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "lift-goals": cmd_lift_goals,
    "relabel": cmd_relabel,
    "generate-instances": cmd_generate,
    "inspect": cmd_inspect,
}


def main(argv=None):
    logging.basicConfig(
        level=os.environ.get("RELHER_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except RelherError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
