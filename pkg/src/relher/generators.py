"""Built-in domains and seeded instance generators (blocks, gripper, maze).

Instance sizes are spread evenly over the requested range, one or more
instances per size, and generation is deterministic under the seed.
"""

from __future__ import annotations

from collections import deque
from functools import lru_cache

import numpy as np

from .parser import parse_domain, parse_problem

BLOCKS_DOMAIN = """\
(domain blocks
  (predicates (on ?x ?y) (ontable ?x) (clear ?x) (holding ?x) (arm-empty))
  (action :name pick-up :parameters (?x)
    :precondition ((clear ?x) (ontable ?x) (arm-empty))
    :add ((holding ?x))
    :delete ((ontable ?x) (clear ?x) (arm-empty)))
  (action :name put-down :parameters (?x)
    :precondition ((holding ?x))
    :add ((ontable ?x) (clear ?x) (arm-empty))
    :delete ((holding ?x)))
  (action :name stack :parameters (?x ?y)
    :precondition ((holding ?x) (clear ?y))
    :add ((on ?x ?y) (clear ?x) (arm-empty))
    :delete ((holding ?x) (clear ?y)))
  (action :name unstack :parameters (?x ?y)
    :precondition ((on ?x ?y) (clear ?x) (arm-empty))
    :add ((holding ?x) (clear ?y))
    :delete ((on ?x ?y) (clear ?x) (arm-empty))))
"""

GRIPPER_DOMAIN = """\
(domain gripper
  (predicates (room ?r) (ball ?b) (gripper ?g) (at-robby ?r) (at ?b ?r)
              (free ?g) (carry ?b ?g) (connected ?a ?b))
  (action :name move :parameters (?from ?to)
    :precondition ((at-robby ?from) (connected ?from ?to))
    :add ((at-robby ?to))
    :delete ((at-robby ?from)))
  (action :name pick :parameters (?b ?r ?g)
    :precondition ((ball ?b) (at ?b ?r) (at-robby ?r) (free ?g))
    :add ((carry ?b ?g))
    :delete ((at ?b ?r) (free ?g)))
  (action :name drop :parameters (?b ?r ?g)
    :precondition ((carry ?b ?g) (at-robby ?r))
    :add ((at ?b ?r) (free ?g))
    :delete ((carry ?b ?g))))
"""

MAZE_DOMAIN = """\
(domain maze
  (predicates (at ?c) (adjacent ?a ?b))
  (action :name move :parameters (?from ?to)
    :precondition ((at ?from) (adjacent ?from ?to))
    :add ((at ?to))
    :delete ((at ?from))))
"""

FAMILIES = ("blocks", "gripper", "maze")

_DOMAIN_TEXT = {"blocks": BLOCKS_DOMAIN, "gripper": GRIPPER_DOMAIN,
                "maze": MAZE_DOMAIN}


@lru_cache(maxsize=None)
def builtin_domain(family):
    if family not in _DOMAIN_TEXT:
        raise ValueError(f"unsupported domain family {family!r}; "
                         f"choose one of {FAMILIES}")
    return parse_domain(_DOMAIN_TEXT[family])


def domain_text(family):
    if family not in _DOMAIN_TEXT:
        raise ValueError(f"unsupported domain family {family!r}; "
                         f"choose one of {FAMILIES}")
    return _DOMAIN_TEXT[family]


def generate_instances(family, size_range, seed, count_per_size=1):
    """Problems for every size in ``size_range`` (inclusive bounds tuple).

    ``size`` means: blocks per instance, balls per instance, or maze side
    length. Deterministic under ``seed``.
    """
    lo, hi = size_range
    if lo < 1 or hi < lo:
        raise ValueError(f"bad size range {size_range!r}")
    make = {"blocks": _blocks_instance, "gripper": _gripper_instance,
            "maze": _maze_instance}[builtin_domain(family).name]
    problems = []
    for size in range(lo, hi + 1):
        for idx in range(count_per_size):
            rng = np.random.default_rng(
                np.random.SeedSequence(entropy=seed, spawn_key=(size, idx)))
            problems.append(make(size, idx, rng))
    return problems


# -- blocks --------------------------------------------------------------


def _random_towers(names, rng):
    towers = []
    for i in rng.permutation(len(names)):
        t = int(rng.integers(0, len(towers) + 1))
        if t == len(towers):
            towers.append([names[i]])
        else:
            towers[t].append(names[i])
    return towers


def _tower_atoms(towers, full_state):
    atoms = []
    for tower in towers:
        if full_state:
            atoms.append(f"(ontable {tower[0]})")
            atoms.append(f"(clear {tower[-1]})")
        for below, above in zip(tower, tower[1:]):
            atoms.append(f"(on {above} {below})")
    if full_state:
        atoms.append("(arm-empty)")
    return atoms


def _blocks_instance(n, idx, rng):
    if n < 2:
        raise ValueError("blocks instances need at least 2 blocks")
    names = [f"b{i + 1}" for i in range(n)]
    init_towers = _random_towers(names, rng)
    init_atoms = _tower_atoms(init_towers, full_state=True)
    for _ in range(50):
        goal_atoms = _tower_atoms(_random_towers(names, rng), full_state=False)
        if goal_atoms and not set(goal_atoms) <= set(init_atoms):
            break
    text = (f"(problem blocks-{n}-{idx}\n"
            f"  (objects {' '.join(names)})\n"
            f"  (init {' '.join(init_atoms)})\n"
            f"  (goal {' '.join(goal_atoms)}))\n")
    return parse_problem(text, builtin_domain("blocks"))


# -- gripper -------------------------------------------------------------


def _gripper_instance(n, idx, rng):
    balls = [f"ball{i + 1}" for i in range(n)]
    objects = ["roomA", "roomB", "left", "right"] + balls
    init = (["(room roomA)", "(room roomB)", "(gripper left)", "(gripper right)",
             "(connected roomA roomB)", "(connected roomB roomA)",
             "(at-robby roomA)", "(free left)", "(free right)"]
            + [f"(ball {b})" for b in balls]
            + [f"(at {b} roomA)" for b in balls])
    goal = [f"(at {b} roomB)" for b in balls]
    text = (f"(problem gripper-{n}-{idx}\n"
            f"  (objects {' '.join(objects)})\n"
            f"  (init {' '.join(init)})\n"
            f"  (goal {' '.join(goal)}))\n")
    return parse_problem(text, builtin_domain("gripper"))


# -- maze ----------------------------------------------------------------


def _maze_tree(k, rng):
    """Random spanning tree of the k x k grid (randomized DFS): corridors
    with dead-end branches, connected by construction."""
    cells = [(r, c) for r in range(k) for c in range(k)]
    adj = {cell: [] for cell in cells}
    start = cells[int(rng.integers(len(cells)))]
    visited = {start}
    stack = [start]
    while stack:
        r, c = stack[-1]
        options = [(r + dr, c + dc) for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1))
                   if (r + dr, c + dc) in adj and (r + dr, c + dc) not in visited]
        if not options:
            stack.pop()
            continue
        nxt = options[int(rng.integers(len(options)))]
        adj[(r, c)].append(nxt)
        adj[nxt].append((r, c))
        visited.add(nxt)
        stack.append(nxt)
    return adj


def _farthest(adj, src):
    dist = {src: 0}
    queue = deque([src])
    far = src
    while queue:
        cell = queue.popleft()
        for nxt in adj[cell]:
            if nxt not in dist:
                dist[nxt] = dist[cell] + 1
                if (dist[nxt], nxt) > (dist[far], far):
                    far = nxt
                queue.append(nxt)
    return far, dist


def _maze_instance(k, idx, rng):
    if k < 2:
        raise ValueError("maze side length must be at least 2")
    adj = _maze_tree(k, rng)
    # start/target at the tree diameter so the shortest path is long
    u, _ = _farthest(adj, (0, 0))
    v, _ = _farthest(adj, u)

    def name(cell):
        return f"c{cell[0]}-{cell[1]}"

    objects = [name(cell) for cell in sorted(adj)]
    init = [f"(at {name(u)})"]
    for cell in sorted(adj):
        for nxt in sorted(adj[cell]):
            init.append(f"(adjacent {name(cell)} {name(nxt)})")
    text = (f"(problem maze-{k}-{idx}\n"
            f"  (objects {' '.join(objects)})\n"
            f"  (init {' '.join(init)})\n"
            f"  (goal (at {name(v)})))\n")
    return parse_problem(text, builtin_domain("maze"))


def maze_shortest_path_length(problem):
    """Grid distance between the initial cell and the goal cell."""
    at = builtin_domain("maze").pred_by_name["at"].id
    adjacent = builtin_domain("maze").pred_by_name["adjacent"].id
    adj = {}
    for atom in problem.init:
        if atom[0] == adjacent:
            adj.setdefault(atom[1], []).append(atom[2])
    start = next(a[1] for a in problem.init if a[0] == at)
    target = next(a[1] for a in problem.goal if a[0] == at)
    dist = {start: 0}
    queue = deque([start])
    while queue:
        cell = queue.popleft()
        if cell == target:
            return dist[cell]
        for nxt in adj.get(cell, ()):
            if nxt not in dist:
                dist[nxt] = dist[cell] + 1
                queue.append(nxt)
    raise ValueError("maze is disconnected")
