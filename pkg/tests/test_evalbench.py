import numpy as np
import pytest

from relher.evalbench import EvalConfig, InstanceResult, \
    aggregate, evaluate, format_table, greedy_rollout, write_report_csv
from relher.generators import builtin_domain, generate_instances, \
    maze_shortest_path_length
from relher.planning import apply
from relher.qnet import QNetwork, Vocabulary
from relher.search import bfs_optimal_length, bfs_plan

from conftest import blocks_problem, make_problem


class OracleNet:
    """Duck-typed network whose Q-values are exact negated distances-to-go,
    computed by breadth-first search. Greedy over it is an optimal policy."""

    def __init__(self, domain):
        self.vocab = Vocabulary.from_domain(domain)
        self._memo = {}

    def forward(self, enc):
        problem, state, goal = enc.problem, enc.state, enc.goal
        values = []
        for action in enc.actions:
            nxt = apply(problem, state, action)
            values.append(-1.0 - self._distance(problem, nxt, goal))
        return np.asarray(values)

    def _distance(self, problem, state, goal):
        from collections import deque

        from relher.planning import applicable_actions

        if goal <= state:
            return 0.0
        key = (id(problem), state, goal)
        if key in self._memo:
            return self._memo[key]
        dist = {state: 0}
        queue = deque([state])
        result = 10_000.0
        while queue:
            s = queue.popleft()
            for action in applicable_actions(problem, s):
                if action.is_noop:
                    continue
                nxt = apply(problem, s, action)
                if nxt in dist:
                    continue
                dist[nxt] = dist[s] + 1
                if goal <= nxt:
                    result = float(dist[nxt])
                    queue.clear()
                    break
                queue.append(nxt)
        self._memo[key] = result
        return result


def random_net(domain, seed=0):
    return QNetwork(Vocabulary.from_domain(domain), layers=1, width=8,
                    seed=seed)


def test_already_solved_instance(blocks):
    p = blocks_problem(2, init=["(on b1 b2)", "(ontable b2)", "(clear b1)",
                                "(arm-empty)"], goal=["(on b1 b2)"])
    solved, plan = greedy_rollout(random_net(blocks), p)
    assert solved and plan == []


def test_all_successors_visited_fails():
    from relher.parser import parse_domain

    flip = parse_domain("""(domain flip (predicates (a) (b) (goal-flag))
      (action :name go :parameters () :precondition ((a)) :add ((b))
              :delete ((a)))
      (action :name back :parameters () :precondition ((b)) :add ((a))
              :delete ((b))))""")
    p = make_problem(flip, ["x"], ["(a)"], ["(goal-flag)"])
    solved, plan = greedy_rollout(random_net(flip), p)
    assert not solved
    assert len(plan) == 1  # a -> b, then every successor is visited


def test_step_cap_fails(blocks):
    # a 3-tower goal needs at least 4 steps, so a 2-step cap must fail
    p = blocks_problem(4, goal=["(on b1 b2)", "(on b2 b3)", "(on b3 b4)"])
    solved, plan = greedy_rollout(random_net(blocks), p,
                                  EvalConfig(max_steps=2))
    assert not solved and len(plan) <= 2


@pytest.mark.parametrize("n,expected", [(1, 3), (2, 5), (3, 9)])
def test_gripper_under_optimal_policy_matches_bfs(n, expected):
    p = generate_instances("gripper", (n, n), 0)[0]
    net = OracleNet(p.domain)
    solved, plan = greedy_rollout(net, p)
    assert solved
    assert len(plan) == bfs_optimal_length(p) == expected
    if n == 2:
        assert len(plan) == 3 * n - 1  # balls batched in pairs


def test_solved_plan_replays_to_goal(blocks):
    p = blocks_problem(3, goal=["(on b1 b2)", "(on b2 b3)"])
    net = OracleNet(p.domain)
    solved, plan = greedy_rollout(net, p)
    assert solved
    state = p.init
    seen = {state}
    for action in plan:
        state = apply(p, state, action)
        assert state not in seen  # no revisits under cycle avoidance
        seen.add(state)
    assert p.goal <= state


def test_plans_never_beat_bfs(blocks):
    for seed in range(3):
        p = generate_instances("blocks", (3, 3), seed)[0]
        net = random_net(p.domain, seed)
        solved, plan = greedy_rollout(net, p)
        if solved:
            assert len(plan) >= bfs_optimal_length(p)


def test_cycle_termination_mode(blocks):
    p = blocks_problem(3)
    solved, plan = greedy_rollout(random_net(blocks), p,
                                  EvalConfig(max_steps=50,
                                             cycle_avoidance=False))
    assert isinstance(solved, bool)
    assert len(plan) <= 50


def test_aggregate_examples():
    rows = [InstanceResult("a", True, 2), InstanceResult("b", True, 4),
            InstanceResult("c", False, 9)]
    report = aggregate(rows)
    assert (report.coverage, report.total) == (2, 6)
    assert report.median == 3.0 and report.mean == 3.0
    none_solved = aggregate([InstanceResult("a", False, 5)])
    assert (none_solved.coverage, none_solved.total, none_solved.median,
            none_solved.mean) == (0, 0, 0.0, 0.0)
    single = aggregate([InstanceResult("a", True, 7)])
    assert (single.total, single.median, single.mean) == (7, 7.0, 7.0)
    with pytest.raises(ValueError):
        aggregate([])


def test_evaluate_and_report_io(tmp_path):
    problems = generate_instances("gripper", (1, 2), 0)
    net = OracleNet(problems[0].domain)
    report = evaluate(net, problems)
    assert report.coverage == 2 and report.n == 2
    threaded = evaluate(net, problems, threads=2)
    assert threaded == report
    write_report_csv(report, tmp_path / "report.csv")
    lines = (tmp_path / "report.csv").read_text().strip().splitlines()
    assert len(lines) == 3
    assert "coverage 2/2" in format_table(report)


# -- instance generators -----------------------------------------------------


def test_gripper_sizes_even_spread():
    problems = generate_instances("gripper", (1, 3), 0)
    ball = builtin_domain("gripper").pred_by_name["ball"].id
    counts = [sum(1 for a in p.init if a[0] == ball) for p in problems]
    assert counts == [1, 2, 3]


def test_generator_determinism():
    from relher.parser import print_problem

    a = generate_instances("blocks", (2, 5), 7)
    b = generate_instances("blocks", (2, 5), 7)
    assert [print_problem(x) for x in a] == [print_problem(x) for x in b]
    c = generate_instances("blocks", (2, 5), 8)
    assert [print_problem(x) for x in a] != [print_problem(x) for x in c]


def test_blocks_instances_solvable_and_nontrivial():
    for seed in range(4):
        p = generate_instances("blocks", (2, 4), seed)[0]
        assert p.goal and not p.goal <= p.init
        assert bfs_plan(p) is not None


def test_maze_single_goal_atom_and_connected():
    p = generate_instances("maze", (5, 5), 3)[0]
    at = builtin_domain("maze").pred_by_name["at"].id
    assert len(p.goal) == 1 and next(iter(p.goal))[0] == at
    assert maze_shortest_path_length(p) >= 1
    assert bfs_plan(p) is not None


def test_maze_diameter_grows_with_size():
    small = generate_instances("maze", (4, 4), 0)[0]
    large = generate_instances("maze", (12, 12), 0)[0]
    assert maze_shortest_path_length(large) > \
        maze_shortest_path_length(small)


def test_count_per_size():
    problems = generate_instances("blocks", (3, 3), 0, count_per_size=4)
    assert len(problems) == 4
    assert len({p.name for p in problems}) == 4


def test_unsupported_family():
    with pytest.raises(ValueError, match="unsupported domain family"):
        generate_instances("sokoban", (1, 2), 0)
