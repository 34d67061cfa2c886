"""Breadth-first search over the grounded state space.

Used as an optimality/solvability oracle for small instances and by the
instance generators; not part of the learned policy.
"""

from __future__ import annotations

from collections import deque

from .env import is_goal
from .planning import apply, applicable_actions


def bfs_plan(problem, max_states=200_000):
    """Shortest plan as a list of ground actions, or None if unsolvable
    (or the cap is hit)."""
    start = problem.init
    if is_goal(start, problem.goal):
        return []
    parent = {start: None}
    queue = deque([start])
    while queue:
        state = queue.popleft()
        for action in applicable_actions(problem, state):
            if action.is_noop:
                continue
            nxt = apply(problem, state, action)
            if nxt in parent:
                continue
            parent[nxt] = (state, action)
            if is_goal(nxt, problem.goal):
                plan = []
                cur = nxt
                while parent[cur] is not None:
                    prev, act = parent[cur]
                    plan.append(act)
                    cur = prev
                plan.reverse()
                return plan
            if len(parent) >= max_states:
                return None
            queue.append(nxt)
    return None


def bfs_optimal_length(problem, max_states=200_000):
    plan = bfs_plan(problem, max_states)
    return None if plan is None else len(plan)
