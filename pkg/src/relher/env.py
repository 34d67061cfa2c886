"""Goal-conditioned episode mechanics.

Every step costs -1 and a state is terminal exactly when the goal atoms
are a subset of it. Episodes start from the problem's fixed initial
state. Horizon truncation is a data-collection artifact, not part of the
task: truncated final transitions still bootstrap during optimization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .planning import apply, applicable_actions

STEP_REWARD = -1.0


@dataclass(frozen=True)
class Transition:
    problem: object
    state: frozenset
    action: object
    reward: float
    next_state: frozenset
    goal: frozenset

    @property
    def terminal(self):
        return self.goal <= self.next_state

    def relabeled(self, goal):
        return Transition(self.problem, self.state, self.action,
                          self.reward, self.next_state, frozenset(goal))


@dataclass
class Trajectory:
    problem: object
    transitions: list = field(default_factory=list)
    achieved_goal: bool = False

    def __len__(self):
        return len(self.transitions)

    def states(self):
        """State sequence s_0 .. s_T (one longer than the transitions)."""
        if not self.transitions:
            return []
        return [t.state for t in self.transitions] + [self.transitions[-1].next_state]


def reset(problem):
    return problem.init


def is_goal(state, goal):
    return goal <= state


def step(problem, state, action, goal):
    next_state = apply(problem, state, action)
    return next_state, STEP_REWARD, is_goal(next_state, goal)


def generate_trajectory(problem, choose_action, horizon, goal=None):
    """Roll out one episode of at most ``horizon`` steps.

    ``choose_action(state, actions) -> action`` supplies the policy. The
    episode ends early when the goal is reached; nothing is appended
    after a terminal transition.
    """
    goal = problem.goal if goal is None else goal
    traj = Trajectory(problem)
    state = reset(problem)
    if is_goal(state, goal):
        traj.achieved_goal = True
        return traj
    for _ in range(horizon):
        actions = applicable_actions(problem, state)
        action = choose_action(state, actions)
        next_state, reward, terminal = step(problem, state, action, goal)
        traj.transitions.append(
            Transition(problem, state, action, reward, next_state, goal))
        state = next_state
        if terminal:
            traj.achieved_goal = True
            break
    return traj


# -- JSON-lines trajectory dumps ----------------------------------------


def dump_trajectories(fh, trajectories):
    """One transition per line; atoms and actions as readable strings."""
    for ep, traj in enumerate(trajectories):
        p = traj.problem
        for t, tr in enumerate(traj.transitions):
            fh.write(json.dumps({
                "episode": ep,
                "t": t,
                "problem": p.name,
                "state": sorted(p.format_atom(a) for a in tr.state),
                "action": p.format_action(tr.action),
                "reward": tr.reward,
                "next_state": sorted(p.format_atom(a) for a in tr.next_state),
                "goal": sorted(p.format_atom(a) for a in tr.goal),
                "terminal": tr.terminal,
            }) + "\n")


def load_trajectories(fh, problem):
    """Inverse of :func:`dump_trajectories` for a known problem."""
    by_episode = {}
    for line in fh:
        line = line.strip()
        if not line:
            continue
        row = json.loads(line)
        tr = Transition(
            problem,
            frozenset(problem.parse_atom(a) for a in row["state"]),
            problem.parse_action(row["action"]),
            float(row["reward"]),
            frozenset(problem.parse_atom(a) for a in row["next_state"]),
            frozenset(problem.parse_atom(a) for a in row["goal"]),
        )
        by_episode.setdefault(row["episode"], []).append((row["t"], tr))
    out = []
    for ep in sorted(by_episode):
        transitions = [tr for _, tr in sorted(by_episode[ep], key=lambda x: x[0])]
        traj = Trajectory(problem, transitions)
        traj.achieved_goal = bool(transitions) and transitions[-1].terminal
        out.append(traj)
    return out
