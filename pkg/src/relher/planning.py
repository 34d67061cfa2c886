"""STRIPS planning core: domains, problems, grounding, successor function.

Predicates and objects are interned to integers at parse time. A ground
atom is a tuple ``(pred_id, obj_id, ...)`` and a state is a frozenset of
such tuples, so set operations in the RL inner loop stay cheap.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import InapplicableActionError

Atom = tuple  # (pred_id, *obj_ids)
State = frozenset


@dataclass(frozen=True)
class Predicate:
    id: int
    name: str
    arity: int


@dataclass(frozen=True)
class ActionSchema:
    """Lifted operator. Body atoms are ``(pred_id, *param_indices)``."""

    id: int
    name: str
    params: tuple[str, ...]
    precondition: tuple[Atom, ...]
    add: tuple[Atom, ...]
    delete: tuple[Atom, ...]


class GroundAction(NamedTuple):
    schema: int  # schema id, or -1 for the dummy action
    args: tuple[int, ...]

    @property
    def is_noop(self):
        return self.schema < 0


NOOP = GroundAction(-1, ())


@dataclass(frozen=True)
class Domain:
    name: str
    predicates: tuple[Predicate, ...]
    schemas: tuple[ActionSchema, ...]

    @property
    def pred_by_name(self):
        return {p.name: p for p in self.predicates}

    @property
    def schema_by_name(self):
        return {a.name: a for a in self.schemas}


@dataclass(eq=False)  # identity semantics: problems are unique objects
class Problem:
    name: str
    domain: Domain
    objects: tuple[str, ...]
    init: State
    goal: frozenset
    _obj_id: dict = field(default_factory=dict, repr=False)
    _app_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._obj_id = {o: i for i, o in enumerate(self.objects)}

    @property
    def n_objects(self):
        return len(self.objects)

    def object_id(self, name):
        return self._obj_id[name]

    # -- human-readable conversions ------------------------------------

    def format_atom(self, atom):
        pred = self.domain.predicates[atom[0]]
        args = ",".join(self.objects[i] for i in atom[1:])
        return f"{pred.name}({args})"

    def parse_atom(self, text):
        """Inverse of :meth:`format_atom`, e.g. ``"on(a,b)"``."""
        name, _, rest = text.strip().partition("(")
        rest = rest.rstrip(")")
        args = [a.strip() for a in rest.split(",") if a.strip()] if rest else []
        pred = self.domain.pred_by_name[name.strip()]
        if len(args) != pred.arity:
            raise ValueError(f"{text!r}: expected {pred.arity} args for {pred.name}")
        return (pred.id, *(self._obj_id[a] for a in args))

    def format_action(self, action):
        if action.is_noop:
            return "noop()"
        schema = self.domain.schemas[action.schema]
        return f"{schema.name}({','.join(self.objects[i] for i in action.args)})"

    def parse_action(self, text):
        name, _, rest = text.strip().partition("(")
        rest = rest.rstrip(")")
        if name.strip() == "noop":
            return NOOP
        args = [a.strip() for a in rest.split(",") if a.strip()] if rest else []
        schema = self.domain.schema_by_name[name.strip()]
        return GroundAction(schema.id, tuple(self._obj_id[a] for a in args))


def ground_body(body, args):
    """Instantiate schema body atoms with an argument tuple."""
    return [(atom[0], *(args[i] for i in atom[1:])) for atom in body]


def apply(problem, state, action):
    """Successor state: ``(state - delete) | add``. Noop is the identity."""
    if action.is_noop:
        return state
    schema = problem.domain.schemas[action.schema]
    pre = ground_body(schema.precondition, action.args)
    if not state.issuperset(pre):
        raise InapplicableActionError(
            f"precondition of {problem.format_action(action)} does not hold")
    result = set(state)
    result.difference_update(ground_body(schema.delete, action.args))
    result.update(ground_body(schema.add, action.args))
    return frozenset(result)


def applicable_actions(problem, state):
    """All ground actions whose precondition holds in ``state``.

    Repeated argument objects are allowed. If nothing applies the result
    is exactly ``(NOOP,)``. Results are cached per state on the problem.
    """
    cached = problem._app_cache.get(state)
    if cached is not None:
        return cached
    by_pred = {}
    for atom in state:
        by_pred.setdefault(atom[0], []).append(atom)
    found = []
    for schema in problem.domain.schemas:
        _match_schema(problem, schema, state, by_pred, found)
    if not found:
        found.append(NOOP)
    result = tuple(sorted(found))
    problem._app_cache[state] = result
    return result


def _match_schema(problem, schema, state, by_pred, out):
    """Backtracking join of precondition atoms against the state."""
    n_params = len(schema.params)
    if not schema.precondition:
        for args in itertools.product(range(problem.n_objects), repeat=n_params):
            out.append(GroundAction(schema.id, args))
        return
    # cheapest atom first: fewest matching state atoms
    pre = sorted(schema.precondition, key=lambda a: len(by_pred.get(a[0], ())))
    binding = [-1] * n_params

    def rec(i):
        if i == len(pre):
            free = [j for j in range(n_params) if binding[j] < 0]
            if not free:
                out.append(GroundAction(schema.id, tuple(binding)))
                return
            for combo in itertools.product(range(problem.n_objects), repeat=len(free)):
                for j, v in zip(free, combo):
                    binding[j] = v
                out.append(GroundAction(schema.id, tuple(binding)))
            for j in free:
                binding[j] = -1
            return
        atom = pre[i]
        refs = atom[1:]
        if all(binding[r] >= 0 for r in refs):
            if (atom[0], *(binding[r] for r in refs)) in state:
                rec(i + 1)
            return
        for ground in by_pred.get(atom[0], ()):
            bound = []
            ok = True
            for r, v in zip(refs, ground[1:]):
                if binding[r] < 0:
                    binding[r] = v
                    bound.append(r)
                elif binding[r] != v:
                    ok = False
                    break
            if ok:
                rec(i + 1)
            for r in bound:
                binding[r] = -1

    rec(0)


def brute_force_applicable(problem, state):
    """Oracle: enumerate every argument tuple of every schema. Test use only."""
    found = []
    for schema in problem.domain.schemas:
        for args in itertools.product(range(problem.n_objects),
                                      repeat=len(schema.params)):
            if state.issuperset(ground_body(schema.precondition, args)):
                found.append(GroundAction(schema.id, args))
    if not found:
        found.append(NOOP)
    return tuple(sorted(found))
