import numpy as np
import pytest

from relher.generators import builtin_domain
from relher.parser import parse_problem


@pytest.fixture(scope="session")
def blocks():
    return builtin_domain("blocks")


@pytest.fixture(scope="session")
def gripper():
    return builtin_domain("gripper")


@pytest.fixture(scope="session")
def maze():
    return builtin_domain("maze")


def make_problem(domain, objects, init, goal, name="t"):
    """Build a problem from atom strings like "(on a b)"."""
    text = (f"(problem {name} (objects {' '.join(objects)}) "
            f"(init {' '.join(init)}) (goal {' '.join(goal)}))")
    return parse_problem(text, domain)


def atoms(problem, *texts):
    return frozenset(problem.parse_atom(t) for t in texts)


def blocks_problem(n=4, init=None, goal=None):
    domain = builtin_domain("blocks")
    names = [f"b{i + 1}" for i in range(n)]
    if init is None:
        init = ([f"(ontable {b})" for b in names]
                + [f"(clear {b})" for b in names] + ["(arm-empty)"])
    return make_problem(domain, names, init, goal or ["(on b1 b2)"])


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def network_gradient_check(net, enc_batch, rng, n_coords=20, step=1e-4):
    """Max relative error of analytic gradients against central finite
    differences on ``n_coords`` randomly chosen parameter coordinates."""
    import relher.autodiff as ad

    weights = rng.standard_normal(enc_batch.n_actions)

    def loss_value():
        return float(net.forward(enc_batch) @ weights)

    q, _ = net.forward(enc_batch, train=True, rng=None)
    loss = ad.weighted_sum(q, weights)
    net.zero_grad()
    ad.backward(loss)
    analytic = net.grad_vector()

    flat = net.param_vector()
    coords = rng.choice(flat.size, size=min(n_coords, flat.size),
                        replace=False)
    worst = 0.0
    for idx in coords:
        orig = flat[idx]
        flat[idx] = orig + step
        net.set_param_vector(flat)
        hi = loss_value()
        flat[idx] = orig - step
        net.set_param_vector(flat)
        lo = loss_value()
        flat[idx] = orig
        numeric = (hi - lo) / (2 * step)
        rel = abs(analytic[idx] - numeric) / max(
            1.0, abs(analytic[idx]), abs(numeric))
        worst = max(worst, rel)
    net.set_param_vector(flat)
    return worst


def permuted_problem(problem, perm):
    """The same problem with object ids permuted by ``perm`` (new id =
    perm[old id])."""
    from relher.planning import Problem

    objects = [None] * len(problem.objects)
    for old, name in enumerate(problem.objects):
        objects[perm[old]] = name

    def remap(atom_set):
        return frozenset((a[0], *(perm[i] for i in a[1:])) for a in atom_set)

    return Problem(problem.name + "-perm", problem.domain, tuple(objects),
                   remap(problem.init), remap(problem.goal))


def random_walk_states(problem, steps, rng):
    """States visited by a uniform random walk, starting at init."""
    from relher.planning import applicable_actions, apply

    state = problem.init
    out = [state]
    for _ in range(steps):
        actions = applicable_actions(problem, state)
        state = apply(problem, state, actions[int(rng.integers(len(actions)))])
        out.append(state)
    return out
