"""Greedy-policy evaluation and benchmark aggregation.

The test protocol: pick the argmax-Q applicable action at every step,
excluding actions whose successor was already visited, for at most
``max_steps`` steps. An episode fails when the cap is hit or every
successor is visited.
"""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass

import numpy as np

from .env import is_goal
from .planning import apply, applicable_actions
from .qnet import encode


@dataclass(frozen=True)
class EvalConfig:
    max_steps: int = 1000
    cycle_avoidance: bool = True


@dataclass(frozen=True)
class InstanceResult:
    problem: str
    solved: bool
    length: int


@dataclass(frozen=True)
class BenchReport:
    results: tuple
    coverage: int
    total: int
    median: float
    mean: float

    @property
    def n(self):
        return len(self.results)

    @property
    def coverage_rate(self):
        return self.coverage / self.n if self.n else 0.0


def greedy_rollout(net, problem, cfg=EvalConfig(), goal=None):
    """Run the greedy policy; returns (solved, plan)."""
    goal = problem.goal if goal is None else goal
    state = problem.init
    visited = {state}
    plan = []
    if is_goal(state, goal):
        return True, plan
    for _ in range(cfg.max_steps):
        actions = applicable_actions(problem, state)
        enc = encode(problem, state, actions, goal, net.vocab)
        q = net.forward(enc)
        successors = [apply(problem, state, a) for a in actions]
        order = np.argsort(-q, kind="stable")
        chosen = None
        if cfg.cycle_avoidance:
            for i in order:
                if successors[i] not in visited:
                    chosen = int(i)
                    break
            if chosen is None:
                return False, plan  # all successors visited
        else:
            chosen = int(order[0])
        nxt = successors[chosen]
        plan.append(actions[chosen])
        if not cfg.cycle_avoidance and nxt in visited:
            return False, plan  # revisited a state: treat as failure
        visited.add(nxt)
        state = nxt
        if is_goal(state, goal):
            return True, plan
    return False, plan


def evaluate(net, problems, cfg=EvalConfig(), threads=1):
    """Greedy rollout per instance; results are collected by instance
    index, so the report does not depend on scheduling."""
    problems = list(problems)
    if threads > 1 and len(problems) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            rollouts = list(pool.map(
                lambda p: greedy_rollout(net, p, cfg), problems))
    else:
        rollouts = [greedy_rollout(net, p, cfg) for p in problems]
    results = [InstanceResult(p.name, solved, len(plan))
               for p, (solved, plan) in zip(problems, rollouts)]
    return aggregate(results)


def aggregate(results):
    """Coverage plus plan-length stats over solved instances only."""
    if not results:
        raise ValueError("aggregate needs at least one instance result")
    solved_lengths = [r.length for r in results if r.solved]
    if solved_lengths:
        total = sum(solved_lengths)
        med = float(statistics.median(solved_lengths))
        mean = total / len(solved_lengths)
    else:
        total, med, mean = 0, 0.0, 0.0
    return BenchReport(tuple(results), len(solved_lengths), total, med, mean)


def write_report_csv(report, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["instance", "solved", "plan_length"])
        for r in report.results:
            writer.writerow([r.problem, int(r.solved), r.length])


def write_summary_csv(report, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["instances", "coverage", "total", "median", "mean"])
        writer.writerow([report.n, report.coverage, report.total,
                         repr(float(report.median)), repr(float(report.mean))])


def format_table(report):
    lines = [f"{'instance':<24} {'solved':>6} {'length':>7}"]
    for r in report.results:
        lines.append(f"{r.problem:<24} {'yes' if r.solved else 'no':>6} "
                     f"{r.length:>7}")
    lines.append("-" * 40)
    lines.append(f"coverage {report.coverage}/{report.n}   "
                 f"total {report.total}   median {report.median}   "
                 f"mean {report.mean:.1f}")
    return "\n".join(lines)
