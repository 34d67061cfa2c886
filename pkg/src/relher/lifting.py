"""Goal-dependency graphs, lifted goal schemas, and schema grounding.

A goal's atoms form an undirected graph with edges between atoms sharing
an object. Subgoal candidates are the vertex-induced connected subgraphs
of each component (plus the empty selection), combined across components.
Each surviving selection is lifted by replacing objects with variables,
one variable per object, under pairwise all-different constraints.

Lifted schemas are deduplicated up to variable renaming: candidates are
grouped by a cheap invariant signature and merged with an exact
isomorphism test built on the injective matcher.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

from .errors import GoalComponentTooLargeError

DEFAULT_COMPONENT_CAP = 12


@dataclass(frozen=True)
class GoalDependencyGraph:
    vertices: tuple  # goal atoms, sorted
    edges: frozenset  # (i, j) index pairs with i < j

    def neighbors(self, i):
        return [b if a == i else a for a, b in self.edges if i in (a, b)]

    def components(self):
        seen = set()
        comps = []
        for start in range(len(self.vertices)):
            if start in seen:
                continue
            comp = []
            stack = [start]
            seen.add(start)
            while stack:
                v = stack.pop()
                comp.append(v)
                for w in self.neighbors(v):
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
            comps.append(sorted(comp))
        return comps


def build_dependency_graph(goal):
    if not goal:
        raise ValueError("goal must be nonempty")
    vertices = tuple(sorted(goal))
    edges = set()
    for i, j in itertools.combinations(range(len(vertices)), 2):
        if set(vertices[i][1:]) & set(vertices[j][1:]):
            edges.add((i, j))
    return GoalDependencyGraph(vertices, frozenset(edges))


@dataclass(frozen=True)
class LiftedGoal:
    """Variable-atoms plus implicit pairwise all-different constraints."""

    atoms: tuple  # (pred_id, *var_ids), variables numbered 0..n_vars-1
    n_vars: int

    @cached_property
    def variables(self):
        return tuple(range(self.n_vars))

    @cached_property
    def constraints(self):
        return tuple(itertools.combinations(range(self.n_vars), 2))

    @property
    def size(self):
        return len(self.atoms)

    def format(self, domain):
        def var(i):
            return f"X{i + 1}"

        parts = []
        for atom in self.atoms:
            pred = domain.predicates[atom[0]]
            parts.append(f"{pred.name}({','.join(var(v) for v in atom[1:])})")
        text = " & ".join(parts)
        if self.n_vars > 1:
            neq = ", ".join(f"{var(a)}!={var(b)}" for a, b in self.constraints)
            text += f"  where {neq}"
        return text


def _connected_subsets(component, edges):
    """All vertex subsets of one component that induce a connected subgraph."""
    n = len(component)
    pos = {v: i for i, v in enumerate(component)}
    adj = [0] * n
    for a, b in edges:
        if a in pos and b in pos:
            adj[pos[a]] |= 1 << pos[b]
            adj[pos[b]] |= 1 << pos[a]
    subsets = []
    for mask in range(1, 1 << n):
        seed = mask & -mask
        reach = seed
        frontier = seed
        while frontier:
            nxt = 0
            m = frontier
            while m:
                low = m & -m
                nxt |= adj[low.bit_length() - 1]
                m ^= low
            frontier = nxt & mask & ~reach
            reach |= frontier
        if reach == mask:
            subsets.append(frozenset(component[i] for i in range(n)
                                     if mask >> i & 1))
    return subsets


def subgoal_selections(goal, cap=DEFAULT_COMPONENT_CAP):
    """Propositional subgoal candidates before lifting and deduplication.

    One entry per element of the cartesian product of per-component
    connected subgraphs (empty selections allowed per component, the
    all-empty combination dropped).
    """
    graph = build_dependency_graph(goal)
    comps = graph.components()
    per_component = []
    for comp in comps:
        if len(comp) > cap:
            raise GoalComponentTooLargeError(
                f"goal component with {len(comp)} atoms exceeds the "
                f"enumeration cap ({cap})")
        choices = [frozenset()] + _connected_subsets(comp, graph.edges)
        per_component.append(choices)
    selections = []
    for combo in itertools.product(*per_component):
        vertex_ids = frozenset().union(*combo)
        if vertex_ids:
            selections.append(frozenset(graph.vertices[i] for i in vertex_ids))
    return sorted(selections, key=lambda s: (len(s), sorted(s)))


def lift_atoms(atoms):
    """Replace objects by variables, one fresh variable per object."""
    mapping = {}
    lifted = []
    for atom in sorted(atoms):
        args = []
        for obj in atom[1:]:
            if obj not in mapping:
                mapping[obj] = len(mapping)
            args.append(mapping[obj])
        lifted.append((atom[0], *args))
    return LiftedGoal(_normalize(lifted), len(mapping)), mapping


def _normalize(atoms):
    """Deterministic variable relabeling: greedily emit the atom with the
    smallest key, numbering variables in order of first occurrence."""
    remaining = list(atoms)
    mapping = {}
    out = []
    while remaining:
        best = None
        for idx, atom in enumerate(remaining):
            trial = dict(mapping)
            key_args = []
            for v in atom[1:]:
                if v not in trial:
                    trial[v] = len(trial)
                key_args.append(trial[v])
            key = (atom[0], *key_args)
            if best is None or key < best[0]:
                best = (key, idx, trial)
        key, idx, trial = best
        out.append(key)
        mapping = trial
        del remaining[idx]
    return tuple(out)


def _signature(lifted):
    return (lifted.n_vars, tuple(sorted(a[0] for a in lifted.atoms)),
            len(lifted.atoms))


def isomorphic(a, b):
    """Exact equality up to variable renaming, via the injective matcher."""
    if a.atoms == b.atoms:
        return True
    if _signature(a) != _signature(b):
        return False
    return ground_schema(a, frozenset(b.atoms)) is not None


def enumerate_lifted_goals(goal, cap=DEFAULT_COMPONENT_CAP):
    """All lifted subgoal schemas of ``goal``, deduplicated up to renaming."""
    groups = {}
    for selection in subgoal_selections(goal, cap):
        lifted, _ = lift_atoms(selection)
        bucket = groups.setdefault(_signature(lifted), [])
        if not any(isomorphic(lifted, seen) for seen in bucket):
            bucket.append(lifted)
    out = []
    for bucket in groups.values():
        out.extend(bucket)
    return tuple(sorted(out, key=lambda g: (g.size, g.n_vars, g.atoms)))


def ground_schema(schema, state, rng=None):
    """Injective assignment of schema variables to objects such that every
    schema atom maps into ``state``, or None.

    Deterministic: schema atoms are matched cheapest-candidate-first with
    forward checking, candidates tried in sorted atom order. Pass a numpy
    ``rng`` to randomize candidate order instead.
    """
    by_pred = {}
    for atom in state:
        by_pred.setdefault(atom[0], []).append(atom)
    for atoms in by_pred.values():
        atoms.sort()
    candidates = []
    for atom in schema.atoms:
        cands = by_pred.get(atom[0], [])
        if not cands:
            return None
        if rng is not None:
            cands = [cands[i] for i in rng.permutation(len(cands))]
        candidates.append(cands)
    order = sorted(range(len(schema.atoms)), key=lambda i: len(candidates[i]))

    assignment = {}
    used = set()

    def match(s_atom, g_atom):
        """Extension binding new vars of s_atom to g_atom, or None."""
        if len(s_atom) != len(g_atom):
            return None
        ext = {}
        for var, obj in zip(s_atom[1:], g_atom[1:]):
            bound = assignment.get(var, ext.get(var))
            if bound is not None:
                if bound != obj:
                    return None
            elif obj in used or obj in ext.values():
                return None
            else:
                ext[var] = obj
        return ext

    def viable(i):
        """Forward check: every unmatched atom keeps >= 1 candidate."""
        for j in order[i:]:
            s_atom = schema.atoms[j]
            if not any(match(s_atom, g) is not None for g in candidates[j]):
                return False
        return True

    def rec(i):
        if i == len(order):
            return dict(assignment)
        s_atom = schema.atoms[order[i]]
        for g_atom in candidates[order[i]]:
            ext = match(s_atom, g_atom)
            if ext is None:
                continue
            assignment.update(ext)
            used.update(ext.values())
            if viable(i + 1):
                result = rec(i + 1)
                if result is not None:
                    return result
            for var in ext:
                del assignment[var]
            used.difference_update(ext.values())
        return None

    return rec(0)


def grounded_atoms(schema, assignment):
    return frozenset((atom[0], *(assignment[v] for v in atom[1:]))
                     for atom in schema.atoms)
