"""Hindsight relabeling of trajectories.

Three relabeling rules share one extraction loop; they differ only in
how the hindsight goal for a candidate final state is computed:

- ``state``: the full final state, statics included;
- ``prop``: the largest subset of the original goal satisfied there,
  which is exactly ``goal & state``;
- ``lifted``: a grounding of a maximal-size lifted subgoal schema that
  is satisfied there.

The extraction scans left to right and greedily takes the longest slice
whose states are all distinct and whose hindsight goal holds at the
final state only.
"""

from __future__ import annotations

from dataclasses import dataclass

from .lifting import enumerate_lifted_goals, ground_schema, grounded_atoms

VARIANTS = ("state", "prop", "lifted", "none")


@dataclass(frozen=True)
class HerVariant:
    kind: str
    lifted_schemas: tuple = ()

    def __post_init__(self):
        if self.kind not in VARIANTS:
            raise ValueError(f"unknown relabeling variant {self.kind!r}")
        if self.kind == "lifted" and not self.lifted_schemas:
            raise ValueError("lifted variant needs at least one goal schema")


def make_variant(kind, problem=None, cap=None):
    """Build a variant; the lifted one precomputes the problem's schemas,
    largest first so the grounding scan can stop at the first hit."""
    if kind != "lifted":
        return HerVariant(kind)
    if problem is None:
        raise ValueError("lifted variant requires a problem")
    kwargs = {} if cap is None else {"cap": cap}
    schemas = enumerate_lifted_goals(problem.goal, **kwargs)
    return HerVariant("lifted", tuple(
        sorted(schemas, key=lambda s: (-s.size, s.n_vars, s.atoms))))


def hindsight_goal(variant, state, goal, rng=None):
    """Relabeling goal for a subtrajectory ending in ``state``, or None."""
    if variant.kind == "state":
        return state
    if variant.kind == "prop":
        achieved = goal & state
        return achieved or None
    if variant.kind == "lifted":
        for schema in variant.lifted_schemas:
            assignment = ground_schema(schema, state, rng)
            if assignment is not None:
                return grounded_atoms(schema, assignment)
        return None
    return None  # "none": relabeling disabled


@dataclass
class RelabeledTrajectory:
    transitions: list
    goal: frozenset
    start: int  # index of the first transition in the source trajectory

    def __len__(self):
        return len(self.transitions)

    @property
    def end(self):
        return self.start + len(self.transitions) - 1


def refine(variant, trajectory, problem, rng=None):
    """Extract non-overlapping relabeled slices from one trajectory.

    Scanning from index i, the longest end index t is chosen such that
    the states of the slice [i..t] are pairwise distinct, a hindsight
    goal exists for the final state, and that goal does not hold in any
    earlier state of the slice. Transitions in a slice are re-goaled;
    the final one becomes terminal by construction.
    """
    if variant.kind == "none":
        return []
    transitions = trajectory.transitions
    n = len(transitions)
    if n == 0:
        return []
    goal = transitions[0].goal
    states = [tr.state for tr in transitions] + [transitions[-1].next_state]
    out = []
    i = 0
    while i < n:
        seen = {states[i]}
        limit = i  # largest t such that states[i..t+1] are pairwise distinct
        while limit < n and states[limit + 1] not in seen:
            seen.add(states[limit + 1])
            limit += 1
        limit -= 1
        emitted = False
        for t in range(limit, i - 1, -1):
            g = hindsight_goal(variant, states[t + 1], goal, rng)
            if g is None:
                continue
            if any(g <= states[j] for j in range(i, t + 1)):
                continue
            out.append(RelabeledTrajectory(
                [tr.relabeled(g) for tr in transitions[i:t + 1]],
                frozenset(g), i))
            i = t + 1
            emitted = True
            break
        if not emitted:
            i += 1
    return out
