import io

import numpy as np
import pytest

from relher.env import dump_trajectories, generate_trajectory, is_goal, \
    load_trajectories, reset, step
from relher.generators import generate_instances
from relher.planning import NOOP, applicable_actions
from relher.search import bfs_plan

from conftest import atoms, blocks_problem, make_problem


def random_policy(rng):
    return lambda state, actions: actions[int(rng.integers(len(actions)))]


def test_reset_returns_init_exactly(blocks):
    p = blocks_problem(2)
    assert reset(p) == p.init
    assert reset(p) == reset(p)


def test_reset_of_solved_problem_is_terminal(blocks):
    p = blocks_problem(2, init=["(on b1 b2)", "(ontable b2)", "(clear b1)",
                                "(arm-empty)"], goal=["(on b1 b2)"])
    assert is_goal(reset(p), p.goal)


def test_is_goal_subset_semantics(blocks):
    p = blocks_problem(2)
    assert is_goal(p.init, frozenset())
    assert is_goal(p.init, p.init)
    assert not is_goal(p.init, p.init | atoms(p, "holding(b1)"))


def test_step_reward_and_terminal(blocks):
    p = blocks_problem(2)
    nxt, reward, terminal = step(p, p.init, p.parse_action("pick-up(b1)"),
                                 atoms(p, "holding(b1)"))
    assert reward == -1.0 and terminal
    nxt, reward, terminal = step(p, p.init, p.parse_action("pick-up(b1)"),
                                 p.goal)
    assert reward == -1.0 and not terminal


def test_noop_step_keeps_state(maze):
    from relher.parser import parse_domain

    from conftest import make_problem
    stuck = parse_domain("""(domain s (predicates (p ?x) (q ?x))
        (action :name go :parameters (?x)
          :precondition ((p ?x)) :add ((q ?x)) :delete ((p ?x))))""")
    problem = make_problem(stuck, ["a"], ["(q a)"], ["(p a)"])
    nxt, reward, terminal = step(problem, problem.init, NOOP, problem.goal)
    assert nxt == problem.init and reward == -1.0 and not terminal


def test_trajectory_chaining_and_horizon(rng):
    p = generate_instances("gripper", (2, 2), 0)[0]
    traj = generate_trajectory(p, random_policy(rng), horizon=30)
    assert len(traj) <= 30
    for a, b in zip(traj.transitions, traj.transitions[1:]):
        assert a.next_state == b.state
    terminals = [t.terminal for t in traj.transitions]
    if traj.achieved_goal:
        assert terminals[-1] and not any(terminals[:-1])
    else:
        assert not any(terminals)


def test_reward_sum_of_failed_trajectory(rng):
    p = generate_instances("maze", (4, 4), 0)[0]
    traj = generate_trajectory(p, random_policy(rng), horizon=20)
    if not traj.achieved_goal:
        assert sum(t.reward for t in traj.transitions) == -len(traj)


def test_discounted_return_of_optimal_plan():
    p = generate_instances("gripper", (1, 1), 0)[0]
    plan = bfs_plan(p)
    k = len(plan)
    gamma = 0.999
    ret = sum(gamma ** i * -1.0 for i in range(k))
    assert ret == pytest.approx(-(1 - gamma ** k) / (1 - gamma))
    assert k == 3  # pick, move, drop


def test_trajectory_dump_round_trip(rng):
    p = generate_instances("gripper", (2, 2), 0)[0]
    trajs = [generate_trajectory(p, random_policy(rng), horizon=15)
             for _ in range(3)]
    buf = io.StringIO()
    dump_trajectories(buf, trajs)
    buf.seek(0)
    loaded = load_trajectories(buf, p)
    assert len(loaded) == len(trajs)
    for a, b in zip(trajs, loaded):
        assert a.achieved_goal == b.achieved_goal
        assert [t.state for t in a.transitions] == \
            [t.state for t in b.transitions]
        assert [t.action for t in a.transitions] == \
            [t.action for t in b.transitions]
        assert [t.goal for t in a.transitions] == \
            [t.goal for t in b.transitions]


def test_trajectory_ends_at_first_terminal():
    p = generate_instances("gripper", (1, 1), 0)[0]
    plan = bfs_plan(p)
    it = iter(plan)

    def follow(state, actions):
        return next(it)

    traj = generate_trajectory(p, follow, horizon=100)
    assert traj.achieved_goal and len(traj) == len(plan)
