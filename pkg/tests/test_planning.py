import numpy as np
import pytest

from relher.errors import InapplicableActionError
from relher.generators import generate_instances
from relher.parser import parse_domain
from relher.planning import NOOP, applicable_actions, apply, \
    brute_force_applicable

from conftest import atoms, blocks_problem, make_problem, random_walk_states

STUCK_DOMAIN = parse_domain("""\
(domain stuck (predicates (p ?x) (q ?x))
  (action :name go :parameters (?x)
    :precondition ((p ?x)) :add ((q ?x)) :delete ((p ?x))))
""")


def fmt_actions(problem, actions):
    return sorted(problem.format_action(a) for a in actions)


def test_two_blocks_on_table_applicable(blocks):
    p = blocks_problem(2)
    assert fmt_actions(p, applicable_actions(p, p.init)) == \
        ["pick-up(b1)", "pick-up(b2)"]


def test_gripper_one_ball_applicable(gripper):
    p = generate_instances("gripper", (1, 1), 0)[0]
    assert fmt_actions(p, applicable_actions(p, p.init)) == \
        ["move(roomA,roomB)", "pick(ball1,roomA,left)",
         "pick(ball1,roomA,right)"]


def test_noop_exactly_when_nothing_applies():
    p = make_problem(STUCK_DOMAIN, ["a"], ["(q a)"], ["(p a)"])
    assert applicable_actions(p, p.init) == (NOOP,)
    live = make_problem(STUCK_DOMAIN, ["a"], ["(p a)"], ["(q a)"])
    acts = applicable_actions(live, live.init)
    assert NOOP not in acts and len(acts) == 1


def test_apply_pick_up(blocks):
    p = blocks_problem(1, init=["(ontable b1)", "(clear b1)", "(arm-empty)"],
                       goal=["(holding b1)"])
    action = p.parse_action("pick-up(b1)")
    assert apply(p, p.init, action) == atoms(p, "holding(b1)")


def test_apply_inverse_actions_restore_state(blocks):
    p = blocks_problem(2)
    s1 = apply(p, p.init, p.parse_action("pick-up(b1)"))
    s2 = apply(p, s1, p.parse_action("put-down(b1)"))
    assert s2 == p.init


def test_apply_noop_is_identity(blocks):
    p = blocks_problem(2)
    assert apply(p, p.init, NOOP) is p.init


def test_apply_rejects_inapplicable(blocks):
    p = blocks_problem(2)
    with pytest.raises(InapplicableActionError):
        apply(p, p.init, p.parse_action("put-down(b1)"))


def test_apply_deterministic(blocks):
    p = blocks_problem(3)
    action = p.parse_action("pick-up(b2)")
    assert apply(p, p.init, action) == apply(p, p.init, action)
    assert applicable_actions(p, p.init) == applicable_actions(p, p.init)


def test_preconditions_hold_for_all_returned_actions(blocks, rng):
    from relher.planning import ground_body

    p = blocks_problem(4)
    for state in random_walk_states(p, 40, rng):
        for action in applicable_actions(p, state):
            if action.is_noop:
                continue
            schema = p.domain.schemas[action.schema]
            assert state.issuperset(ground_body(schema.precondition,
                                                action.args))


@pytest.mark.parametrize("family,size", [("blocks", 3), ("blocks", 4),
                                         ("gripper", 1), ("maze", 2)])
def test_successor_oracle_equivalence(family, size):
    rng = np.random.default_rng(42)
    p = generate_instances(family, (size, size), 3)[0]
    for state in random_walk_states(p, 60, rng):
        assert applicable_actions(p, state) == brute_force_applicable(p, state)


def test_oracle_equivalence_with_repeated_arguments():
    domain = parse_domain("""\
(domain rep (predicates (edge ?a ?b) (mark ?a))
  (action :name hop :parameters (?a ?b)
    :precondition ((edge ?a ?b)) :add ((mark ?b)) :delete ()))
""")
    p = make_problem(domain, ["n1", "n2"],
                     ["(edge n1 n1)", "(edge n1 n2)"], ["(mark n2)"])
    acts = applicable_actions(p, p.init)
    assert acts == brute_force_applicable(p, p.init)
    assert "hop(n1,n1)" in fmt_actions(p, acts)


def test_unconstrained_parameter_enumerates_objects():
    domain = parse_domain("""\
(domain free (predicates (flag) (mark ?a))
  (action :name tag :parameters (?a)
    :precondition ((flag)) :add ((mark ?a)) :delete ()))
""")
    p = make_problem(domain, ["x", "y", "z"], ["(flag)"], ["(mark x)"])
    assert applicable_actions(p, p.init) == brute_force_applicable(p, p.init)
    assert len(applicable_actions(p, p.init)) == 3
