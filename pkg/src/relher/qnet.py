"""Relational message-passing Q-network over sets of ground atoms.

The input joins three atom groups over an extended vocabulary: the state
(original predicates), one atom per applicable action (a fresh predicate
per schema whose first argument is a fresh action object), and the goal
(a shadow predicate per original predicate). Message passing produces an
embedding per object; the Q-value of an action is read out from its
action object's embedding concatenated with the sum of the original
(non-action) object embeddings of its instance.

Message MLPs are per-predicate and shared across layers; the residual
update MLP and layer norm are per-layer. Aggregation is an elementwise
hard max, so gradients route to the argmax contributor only. In training
mode an auxiliary readout is taken from a uniformly sampled layer and
trained with the same loss, which is what makes deep stacks trainable.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import kernels
from .errors import CheckpointFormatError, VocabularyMismatchError
from .planning import applicable_actions

CHECKPOINT_MAGIC = b"RQN1"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class Vocabulary:
    """Fixed per-domain symbol table; nothing depends on a problem instance."""

    n_base: int
    n_schemas: int
    arities: tuple  # per extended predicate id
    names: tuple

    @classmethod
    def from_domain(cls, domain):
        arities = [p.arity for p in domain.predicates]
        names = [p.name for p in domain.predicates]
        arities += [p.arity for p in domain.predicates]
        names += [f"goal:{p.name}" for p in domain.predicates]
        for schema in domain.schemas:
            arities.append(len(schema.params) + 1)
            names.append(f"apply:{schema.name}")
        arities.append(1)
        names.append("apply:noop")
        return cls(len(domain.predicates), len(domain.schemas),
                   tuple(arities), tuple(names))

    def goal_pred(self, base_pred):
        return self.n_base + base_pred

    def action_pred(self, schema_id):
        if schema_id < 0:
            return self.noop_pred
        return 2 * self.n_base + schema_id

    @property
    def noop_pred(self):
        return 2 * self.n_base + self.n_schemas

    @property
    def n_predicates(self):
        return len(self.arities)

    @property
    def hash_hex(self):
        blob = json.dumps(list(zip(self.names, self.arities))).encode()
        return hashlib.sha256(blob).hexdigest()[:32]


@dataclass
class Encoded:
    """One (state, applicable actions, goal) instance as index arrays."""

    n_objects: int
    n_base_objects: int
    args_by_pred: dict  # ext pred id -> int64 array (m, arity)
    actions: tuple
    action_rows: np.ndarray  # object row of each action, in action order
    problem: object = None
    state: frozenset = None
    goal: frozenset = None

    @property
    def n_atoms(self):
        return sum(a.shape[0] for a in self.args_by_pred.values())


def encode(problem, state, actions, goal, vocab):
    """Build the network input. ``actions`` must be the applicable set."""
    n_base = problem.n_objects
    atoms = {}

    def put(pred, args):
        atoms.setdefault(pred, []).append(args)

    for atom in sorted(state):
        if atom[0] >= vocab.n_base:
            raise VocabularyMismatchError(f"state predicate id {atom[0]} "
                                          "is not in the vocabulary")
        put(atom[0], atom[1:])
    for atom in sorted(goal):
        if atom[0] >= vocab.n_base:
            raise VocabularyMismatchError(f"goal predicate id {atom[0]} "
                                          "is not in the vocabulary")
        put(vocab.goal_pred(atom[0]), atom[1:])
    action_rows = np.empty(len(actions), dtype=np.int64)
    for i, action in enumerate(actions):
        obj = n_base + i
        action_rows[i] = obj
        put(vocab.action_pred(action.schema), (obj, *action.args))
    args_by_pred = {
        pred: np.asarray(rows, dtype=np.int64).reshape(len(rows), -1)
        for pred, rows in sorted(atoms.items())
    }
    return Encoded(n_base + len(actions), n_base, args_by_pred,
                   tuple(actions), action_rows, problem, state, goal)


def encode_current(problem, state, goal, vocab):
    return encode(problem, state, applicable_actions(problem, state), goal, vocab)


class EncodedBatch:
    """Disjoint union of encoded instances, grouped by predicate."""

    def __init__(self, inputs):
        self.inputs = list(inputs)
        offsets = []
        total = 0
        for enc in self.inputs:
            offsets.append(total)
            total += enc.n_objects
        self.n_objects = total
        self.n_graphs = len(self.inputs)

        merged = {}
        for enc, off in zip(self.inputs, offsets):
            for pred, args in enc.args_by_pred.items():
                merged.setdefault(pred, []).append(args + off)
        self.args_by_pred = {
            pred: np.concatenate(parts, axis=0) if len(parts) > 1 else parts[0]
            for pred, parts in sorted(merged.items())
        }
        # flattened (pred, args, row-targets) groups for the layer kernel
        self.groups = [(pred, args, np.ascontiguousarray(args.reshape(-1)))
                       for pred, args in self.args_by_pred.items()
                       if args.shape[1] > 0]

        orig_rows, orig_segs = [], []
        act_rows, act_graph = [], []
        self.action_slices = []
        start = 0
        for g, (enc, off) in enumerate(zip(self.inputs, offsets)):
            orig_rows.append(np.arange(off, off + enc.n_base_objects))
            orig_segs.append(np.full(enc.n_base_objects, g))
            act_rows.append(enc.action_rows + off)
            act_graph.append(np.full(len(enc.actions), g))
            self.action_slices.append((start, len(enc.actions)))
            start += len(enc.actions)
        self.orig_rows = np.concatenate(orig_rows).astype(np.int64)
        self.orig_segs = np.concatenate(orig_segs).astype(np.int64)
        self.action_rows = np.concatenate(act_rows).astype(np.int64)
        self.action_graph = np.concatenate(act_graph).astype(np.int64)
        self.n_actions = start

    def split_per_graph(self, values):
        return [values[s:s + c] for s, c in self.action_slices]


# -- fused layer operations ----------------------------------------------
#
# One tape node per network stage instead of one per primitive; the
# backward closures are hand-written. The message/update/readout math is
# exercised end to end by the finite-difference gradient tests.


def _message_pass(f, groups, params, n_objects):
    """All per-predicate message MLPs plus the hard-max aggregation."""
    fd = f.data
    k = fd.shape[1]
    msg_parts, saved = [], []
    parents = [f]
    for pred, args, flat in groups:
        m, arity = args.shape
        w1, b1 = params[f"msg{pred}.0.w"], params[f"msg{pred}.0.b"]
        w2, b2 = params[f"msg{pred}.1.w"], params[f"msg{pred}.1.b"]
        x = fd[flat].reshape(m, arity * k)
        h = x @ w1.data + b1.data
        a = kernels.mish(h)
        out = a @ w2.data + b2.data
        msg_parts.append(out.reshape(m * arity, k))
        saved.append((h, a))
        parents += [w1, b1, w2, b2]
    if not msg_parts:
        return ad.constant(np.zeros_like(fd))
    msgs = np.concatenate(msg_parts) if len(msg_parts) > 1 else msg_parts[0]
    targets = np.concatenate([flat for _, _, flat in groups]) \
        if len(groups) > 1 else groups[0][2]
    agg, argmax = kernels.scatter_max(np.ascontiguousarray(msgs), targets,
                                      n_objects)
    if not ad.grad_enabled():
        return ad.Tensor(agg)
    node = ad.Tensor(agg, tuple(parents))

    def bwd(g):
        g_msgs = kernels.scatter_max_grad(np.ascontiguousarray(g), argmax,
                                          msgs.shape[0])
        grad_rows = []
        start = 0
        for (pred, args, flat), (h, a) in zip(groups, saved):
            m, arity = args.shape
            w1, b1 = params[f"msg{pred}.0.w"], params[f"msg{pred}.0.b"]
            w2, b2 = params[f"msg{pred}.1.w"], params[f"msg{pred}.1.b"]
            g_out = g_msgs[start:start + m * arity].reshape(m, arity * k)
            start += m * arity
            g_a = g_out @ w2.data.T
            g_h = kernels.mish_grad(h, np.ascontiguousarray(g_a))
            x = fd[flat].reshape(m, arity * k)
            ad._accum(w2, a.T @ g_out)
            ad._accum(b2, g_out.sum(axis=0))
            ad._accum(w1, x.T @ g_h)
            ad._accum(b1, g_h.sum(axis=0))
            grad_rows.append((g_h @ w1.data.T).reshape(m * arity, k))
        g_rows = np.concatenate(grad_rows) if len(grad_rows) > 1 \
            else grad_rows[0]
        ad._accum(f, kernels.segment_sum(np.ascontiguousarray(g_rows),
                                         targets, fd.shape[0]))

    node.bwd = bwd
    return node


def _residual_update(f, agg, w1, b1, w2, b2, gain, bias, eps=1e-5):
    """LayerNorm(f + MLP([f; agg])) in one node."""
    u = np.concatenate((f.data, agg.data), axis=1)
    h = u @ w1.data + b1.data
    a = kernels.mish(h)
    y = f.data + (a @ w2.data + b2.data)
    mu = y.mean(axis=1, keepdims=True)
    yc = y - mu
    var = (yc * yc).mean(axis=1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = yc * inv
    out = xhat * gain.data + bias.data
    if not ad.grad_enabled():
        return ad.Tensor(out)
    node = ad.Tensor(out, (f, agg, w1, b1, w2, b2, gain, bias))
    k = f.data.shape[1]

    def bwd(g):
        dxhat = g * gain.data
        dy = inv * (dxhat - dxhat.mean(axis=1, keepdims=True)
                    - xhat * (dxhat * xhat).mean(axis=1, keepdims=True))
        ad._accum(gain, (g * xhat).sum(axis=0))
        ad._accum(bias, g.sum(axis=0))
        g_a = dy @ w2.data.T
        g_h = kernels.mish_grad(h, np.ascontiguousarray(g_a))
        g_u = g_h @ w1.data.T
        ad._accum(w2, a.T @ dy)
        ad._accum(b2, dy.sum(axis=0))
        ad._accum(w1, u.T @ g_h)
        ad._accum(b1, g_h.sum(axis=0))
        ad._accum(f, dy + g_u[:, :k])
        ad._accum(agg, g_u[:, k:])

    node.bwd = bwd
    return node


def _readout(f, batch, w1, b1, w2, b2):
    """Per-action Q: MLP over [f(action object); sum of original-object
    embeddings of its instance]."""
    fd = f.data
    k = fd.shape[1]
    per_obj = np.ascontiguousarray(fd[batch.orig_rows])
    summary = kernels.segment_sum(per_obj, batch.orig_segs, batch.n_graphs)
    x = np.concatenate((fd[batch.action_rows], summary[batch.action_graph]),
                       axis=1)
    h = x @ w1.data + b1.data
    a = kernels.mish(h)
    q = (a @ w2.data + b2.data).reshape(-1)
    if not ad.grad_enabled():
        return ad.Tensor(q)
    node = ad.Tensor(q, (f, w1, b1, w2, b2))

    def bwd(g):
        g2 = g.reshape(-1, 1)
        g_a = g2 @ w2.data.T
        g_h = kernels.mish_grad(h, np.ascontiguousarray(g_a))
        g_x = g_h @ w1.data.T
        ad._accum(w2, a.T @ g2)
        ad._accum(b2, g2.sum(axis=0))
        ad._accum(w1, x.T @ g_h)
        ad._accum(b1, g_h.sum(axis=0))
        g_f = np.zeros_like(fd)
        g_summary = kernels.segment_sum(
            np.ascontiguousarray(g_x[:, k:]), batch.action_graph,
            batch.n_graphs)
        g_f[batch.orig_rows] = g_summary[batch.orig_segs]
        g_f[batch.action_rows] += g_x[:, :k]
        ad._accum(f, g_f)

    node.bwd = bwd
    return node


class QNetwork:
    """Parameters plus forward/backward over encoded batches."""

    def __init__(self, vocab, layers=30, width=32, seed=0, dtype=np.float64):
        self.vocab = vocab
        self.layers = layers
        self.width = width
        self.dtype = np.dtype(dtype)
        self.seed = seed
        self.params = {}
        self._build(np.random.default_rng(
            np.random.SeedSequence(entropy=seed, spawn_key=(0xE17,))))

    # -- parameters ------------------------------------------------------

    def _linear(self, rng, name, fan_in, fan_out):
        bound = 1.0 / np.sqrt(max(fan_in, 1))
        w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        b = rng.uniform(-bound, bound, size=(fan_out,))
        self.params[f"{name}.w"] = ad.parameter(w.astype(self.dtype))
        self.params[f"{name}.b"] = ad.parameter(b.astype(self.dtype))

    def _build(self, rng):
        k = self.width
        for pred in range(self.vocab.n_predicates):
            arity = self.vocab.arities[pred]
            if arity == 0:
                continue  # no arguments, nothing to send or receive
            self._linear(rng, f"msg{pred}.0", arity * k, k)
            self._linear(rng, f"msg{pred}.1", k, arity * k)
        for layer in range(self.layers):
            self._linear(rng, f"upd{layer}.0", 2 * k, k)
            self._linear(rng, f"upd{layer}.1", k, k)
            self.params[f"ln{layer}.g"] = ad.parameter(
                np.ones(k, dtype=self.dtype))
            self.params[f"ln{layer}.b"] = ad.parameter(
                np.zeros(k, dtype=self.dtype))
        self._linear(rng, "readout.0", 2 * k, k)
        self._linear(rng, "readout.1", k, 1)

    def param_vector(self):
        return np.concatenate([self.params[n].data.ravel()
                               for n in self.params])

    def set_param_vector(self, flat):
        pos = 0
        for name in self.params:
            p = self.params[name]
            size = p.data.size
            p.data = np.asarray(flat[pos:pos + size], dtype=self.dtype) \
                .reshape(p.data.shape)
            pos += size
        if pos != len(flat):
            raise ValueError("parameter vector has the wrong length")

    def grad_vector(self):
        out = []
        for name in self.params:
            g = self.params[name].grad
            out.append(np.zeros(self.params[name].data.size, dtype=self.dtype)
                       if g is None else g.ravel())
        return np.concatenate(out)

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def copy_params_from(self, other):
        for name, p in other.params.items():
            self.params[name].data = p.data.copy()

    def clone(self):
        twin = QNetwork(self.vocab, self.layers, self.width, self.seed,
                        self.dtype)
        twin.copy_params_from(self)
        return twin

    # -- forward -----------------------------------------------------------

    def _readout_from(self, f, batch):
        p = self.params
        return _readout(f, batch, p["readout.0.w"], p["readout.0.b"],
                        p["readout.1.w"], p["readout.1.b"])

    def _forward(self, batch, train, rng):
        p = self.params
        f = ad.constant(np.zeros((batch.n_objects, self.width),
                                 dtype=self.dtype))
        per_layer = []
        for layer in range(self.layers):
            agg = _message_pass(f, batch.groups, p, batch.n_objects)
            f = _residual_update(f, agg, p[f"upd{layer}.0.w"],
                                 p[f"upd{layer}.0.b"], p[f"upd{layer}.1.w"],
                                 p[f"upd{layer}.1.b"], p[f"ln{layer}.g"],
                                 p[f"ln{layer}.b"])
            if train:
                per_layer.append(f)
        q = self._readout_from(f, batch)
        aux = None
        if train and self.layers > 0:
            pick = int(rng.integers(1, self.layers + 1)) if rng is not None \
                else self.layers
            aux = self._readout_from(per_layer[pick - 1], batch)
        return q, aux

    def forward(self, batch, train=False, rng=None):
        """Q-values for every action in the batch, in batch action order.

        Training mode returns tape tensors ``(q, aux)``; evaluation mode
        returns a plain float array (and the random-layer readout is
        fixed to the last layer, i.e. disabled).
        """
        if isinstance(batch, Encoded):
            batch = EncodedBatch([batch])
        if train:
            return self._forward(batch, True, rng)
        with ad.no_grad():
            q, _ = self._forward(batch, False, None)
        return q.data

    def q_values(self, problem, state, goal):
        """Convenience map action -> Q for a single state."""
        enc = encode_current(problem, state, goal, self.vocab)
        q = self.forward(enc)
        return dict(zip(enc.actions, q.tolist()))


# -- checkpoints ---------------------------------------------------------


def save_checkpoint(net, path, extra=None):
    flat = net.param_vector().astype("<f4")
    blob = bytearray()
    blob += CHECKPOINT_MAGIC
    blob += struct.pack("<I", CHECKPOINT_VERSION)
    blob += bytes.fromhex(net.vocab.hash_hex)
    blob += struct.pack("<II", net.layers, net.width)
    blob += struct.pack("<Q", flat.size)
    blob += flat.tobytes()
    with open(path, "wb") as fh:
        fh.write(blob)
    sidecar = {
        "layers": net.layers,
        "width": net.width,
        "seed": net.seed,
        "vocab_hash": net.vocab.hash_hex,
        "activation": "mish",
        "aggregation": "hard_max",
    }
    if extra:
        sidecar.update(extra)
    with open(str(path) + ".json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path, vocab, dtype=np.float64):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != CHECKPOINT_MAGIC:
        raise CheckpointFormatError(f"{path}: bad magic {blob[:4]!r}")
    version, = struct.unpack_from("<I", blob, 4)
    if version != CHECKPOINT_VERSION:
        raise CheckpointFormatError(f"{path}: unsupported version {version}")
    vocab_hash = blob[8:24].hex()
    if vocab_hash != vocab.hash_hex:
        raise VocabularyMismatchError(
            f"{path}: checkpoint vocabulary {vocab_hash} does not match "
            f"domain vocabulary {vocab.hash_hex}")
    layers, width = struct.unpack_from("<II", blob, 24)
    n_params, = struct.unpack_from("<Q", blob, 32)
    flat = np.frombuffer(blob, dtype="<f4", count=n_params, offset=40)
    net = QNetwork(vocab, layers=layers, width=width, dtype=dtype)
    net.set_param_vector(flat.astype(dtype))
    return net
