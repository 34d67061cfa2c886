import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relher.errors import ParseError, ValidationError
from relher.generators import BLOCKS_DOMAIN, GRIPPER_DOMAIN
from relher.parser import parse_domain, parse_problem, print_domain, \
    print_problem

from conftest import make_problem


def test_blocks_domain_has_reference_schemas():
    domain = parse_domain(BLOCKS_DOMAIN)
    assert [s.name for s in domain.schemas] == \
        ["pick-up", "put-down", "stack", "unstack"]
    by_name = domain.pred_by_name
    assert by_name["on"].arity == 2
    assert by_name["arm-empty"].arity == 0
    pick_up = domain.schema_by_name["pick-up"]
    assert len(pick_up.params) == 1
    assert len(pick_up.precondition) == 3


def test_domain_with_no_schemas():
    domain = parse_domain("(domain empty (predicates (p ?x)))")
    assert domain.schemas == ()
    assert len(domain.predicates) == 1


def test_undeclared_predicate_in_schema_body():
    text = """(domain bad (predicates (p ?x))
      (action :name a :parameters (?x)
        :precondition ((q ?x)) :add ((p ?x)) :delete ()))"""
    with pytest.raises(ValidationError, match="undeclared predicate 'q'"):
        parse_domain(text)


def test_arity_mismatch_in_schema_body():
    text = """(domain bad (predicates (p ?x))
      (action :name a :parameters (?x)
        :precondition ((p ?x ?x)) :add () :delete ()))"""
    with pytest.raises(ValidationError, match="expects 1 arguments"):
        parse_domain(text)


def test_unbound_variable_in_schema_body():
    text = """(domain bad (predicates (p ?x))
      (action :name a :parameters (?x)
        :precondition ((p ?y)) :add () :delete ()))"""
    with pytest.raises(ValidationError, match="not a parameter"):
        parse_domain(text)


def test_overlapping_add_delete_rejected():
    text = """(domain bad (predicates (p ?x))
      (action :name a :parameters (?x)
        :precondition () :add ((p ?x)) :delete ((p ?x))))"""
    with pytest.raises(ValidationError, match="add and delete"):
        parse_domain(text)


def test_syntax_error_carries_position():
    with pytest.raises(ParseError) as err:
        parse_domain("(domain x\n  (predicates (p ?x))")
    assert err.value.line == 1 and err.value.col == 1
    with pytest.raises(ParseError) as err:
        parse_domain("(domain x (predicates (p ?x)))\n)")
    assert err.value.line == 2


def test_problem_parsing_and_validation(blocks):
    p = make_problem(blocks, ["a", "b"],
                     ["(ontable a)", "(ontable b)", "(clear a)", "(clear b)",
                      "(arm-empty)"], ["(on a b)"])
    assert p.n_objects == 2
    assert len(p.init) == 5 and len(p.goal) == 1
    with pytest.raises(ValidationError, match="undeclared object"):
        make_problem(blocks, ["a"], ["(clear c)"], ["(on a a)"])
    with pytest.raises(ValidationError, match="undeclared predicate"):
        make_problem(blocks, ["a"], ["(foo a)"], ["(on a a)"])
    with pytest.raises(ValidationError, match="expects 2 arguments"):
        make_problem(blocks, ["a"], ["(on a)"], [])


def test_duplicate_sections_and_names_rejected(blocks):
    with pytest.raises(ParseError, match="duplicate object"):
        make_problem(blocks, ["a", "a"], [], [])
    with pytest.raises(ParseError, match="duplicate predicate"):
        parse_domain("(domain d (predicates (p ?x) (p ?y)))")
    with pytest.raises(ParseError, match="missing"):
        parse_problem("(problem p (objects a))", blocks)


def test_round_trip_builtin_domains():
    for text in (BLOCKS_DOMAIN, GRIPPER_DOMAIN):
        domain = parse_domain(text)
        again = parse_domain(print_domain(domain))
        assert again == domain


def test_round_trip_problem(gripper):
    p = make_problem(gripper, ["roomA", "roomB", "left", "ball1"],
                     ["(room roomA)", "(room roomB)", "(at ball1 roomA)"],
                     ["(at ball1 roomB)"])
    again = parse_problem(print_problem(p), gripper)
    assert again.objects == p.objects
    assert again.init == p.init and again.goal == p.goal


_name = st.from_regex(r"[a-z][a-z0-9-]{0,5}", fullmatch=True)


@st.composite
def _domains(draw):
    pred_names = draw(st.lists(_name, min_size=1, max_size=4, unique=True))
    preds = [(n, draw(st.integers(0, 3))) for n in pred_names]
    n_actions = draw(st.integers(0, 3))
    parts = ["(domain d (predicates "
             + " ".join(f"({n}{''.join(f' ?v{i}' for i in range(a))})"
                        for n, a in preds) + ")"]
    for ai in range(n_actions):
        n_params = draw(st.integers(1, 3))
        params = [f"?p{i}" for i in range(n_params)]

        def body():
            atoms = []
            for _ in range(draw(st.integers(0, 3))):
                pname, arity = preds[draw(st.integers(0, len(preds) - 1))]
                args = [params[draw(st.integers(0, n_params - 1))]
                        for _ in range(arity)]
                atoms.append(f"({pname}{''.join(' ' + a for a in args)})")
            return atoms

        add = body()
        delete = [a for a in body() if a not in add]
        parts.append(
            f"(action :name act{ai} :parameters ({' '.join(params)}) "
            f":precondition ({' '.join(body())}) "
            f":add ({' '.join(add)}) :delete ({' '.join(delete)}))")
    return "".join(parts) + ")"


@settings(max_examples=60, deadline=None)
@given(_domains())
def test_round_trip_random_domains(text):
    domain = parse_domain(text)
    assert parse_domain(print_domain(domain)) == domain
