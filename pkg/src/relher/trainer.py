"""DQN training loop: Boltzmann rollouts, hindsight relabeling into a
prioritized buffer, Huber-loss optimization against a target network.

Per episode: sample one training problem per rollout, generate up to
``trajectories_per_episode`` rollouts of at most ``rollout_horizon``
steps, relabel each, insert experience, run ``steps_per_episode``
optimization steps, then refresh the target network. Horizon-truncated
transitions still bootstrap; only goal-satisfying transitions are
terminal.

Everything is driven by named RNG streams derived from the config seed,
so a fixed seed reproduces the metrics stream byte for byte.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .env import Trajectory, Transition, step
from .evalbench import EvalConfig, evaluate
from .planning import applicable_actions
from .qnet import EncodedBatch, QNetwork, Vocabulary, encode, encode_current, \
    save_checkpoint
from .refine import make_variant, refine
from .replay import ReplayBuffer, default_encoder

log = logging.getLogger("relher.trainer")

METRICS_COLUMNS = ("episode", "mean_loss", "mean_goal_size", "mean_traj_len",
                   "buffer_size", "temperature", "lr", "val_coverage",
                   "val_total_len")

_STREAMS = {"rollout": 1, "optimize": 2, "tiebreak": 3, "refine": 4}


def rng_for(seed, stream, *key):
    return np.random.default_rng(np.random.SeedSequence(
        entropy=seed, spawn_key=(_STREAMS[stream], *key)))


@dataclass(frozen=True)
class TrainerConfig:
    her: str = "prop"
    seed: int = 0
    episodes: int = 300
    gamma: float = 0.999
    steps_per_episode: int = 32
    batch_size: int = 32
    trajectories_per_episode: int = 4
    rollout_horizon: int = 100
    huber_delta: float = 1.0
    target_update_period: int = 1
    layers: int = 30
    width: int = 32
    lr_start: float = 1e-3
    lr_end: float = 1e-6
    lr_decay_episodes: int = 300
    temp_start: float = 1.0
    temp_end: float = 0.1
    temp_decay_episodes: int = 600
    buffer_capacity: int = 1000
    priority_alpha: float = 0.6
    priority_beta: float = 0.4
    priority_eps: float = 1e-3
    optimizer: str = "adam"
    store_original: bool = True
    eval_period: int = 25
    eval_max_steps: int = 1000
    lifting_cap: int = 12
    random_grounding: bool = False
    dtype: str = "float32"


def linear_schedule(start, end, decay_episodes):
    def value(episode):
        frac = min(episode, decay_episodes) / decay_episodes
        return start + (end - start) * frac

    return value


def boltzmann_probs(q, temperature):
    z = (np.asarray(q, dtype=np.float64) - np.max(q)) / temperature
    p = np.exp(z)
    return p / p.sum()


def boltzmann_select(q_values, temperature, rng):
    """Sample an action with probability proportional to exp(Q/T)."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    if not q_values:
        raise ValueError("no actions to select from")
    actions = sorted(q_values)
    probs = boltzmann_probs([q_values[a] for a in actions], temperature)
    return actions[int(rng.choice(len(actions), p=probs))]


def compute_target(transition, target_net, gamma):
    """Bellman target: r for terminal transitions, else r plus the
    discounted best target-network Q over the successor's actions."""
    if transition.goal <= transition.next_state:
        return transition.reward
    problem = transition.problem
    enc = encode_current(problem, transition.next_state, transition.goal,
                         target_net.vocab)
    q = target_net.forward(enc)
    return transition.reward + gamma * float(q.max())


def huber_value(error, delta=1.0):
    e = abs(error)
    return 0.5 * e * e if e <= delta else delta * (e - 0.5 * delta)


class SGD:
    def step(self, params, lr):
        for p in params.values():
            if p.grad is not None:
                p.data -= lr * p.grad


class Adam:
    def __init__(self, beta1=0.9, beta2=0.999, eps=1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.state = {}

    def step(self, params, lr):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        correction = np.sqrt(1 - b2 ** self.t) / (1 - b1 ** self.t)
        for name, p in params.items():
            if p.grad is None:
                continue
            if name not in self.state:
                self.state[name] = (np.zeros_like(p.data), np.zeros_like(p.data))
            m, v = self.state[name]
            m += (1 - b1) * (p.grad - m)
            v += (1 - b2) * (p.grad * p.grad - v)
            p.data -= lr * correction * m / (np.sqrt(v) + self.eps)


def make_optimizer(name):
    if name == "sgd":
        return SGD()
    if name == "adam":
        return Adam()
    raise ValueError(f"unknown optimizer {name!r}")


@dataclass
class EpisodeStats:
    episode: int
    mean_loss: float | None
    mean_goal_size: float | None
    mean_traj_len: float | None
    buffer_size: int
    temperature: float
    lr: float


@dataclass
class CheckpointRecord:
    episode: int
    coverage: int
    total_length: int
    path: str


def select_checkpoint(history, rng=None):
    """Best validation coverage, then shortest total length, then a seeded
    random choice among full ties."""
    if not history:
        raise ValueError("no evaluated checkpoints to select from")
    best_cov = max(r.coverage for r in history)
    tied = [r for r in history if r.coverage == best_cov]
    best_len = min(r.total_length for r in tied)
    tied = [r for r in tied if r.total_length == best_len]
    if len(tied) == 1 or rng is None:
        return tied[0]
    return tied[int(rng.integers(len(tied)))]


class Trainer:
    def __init__(self, train_problems, config, val_problems=(), out_dir=None):
        if not train_problems:
            raise ValueError("need at least one training problem")
        self.cfg = config
        self.train_problems = list(train_problems)
        self.val_problems = list(val_problems)
        self.out_dir = Path(out_dir) if out_dir else None
        domain = self.train_problems[0].domain
        self.vocab = Vocabulary.from_domain(domain)
        dtype = np.float32 if config.dtype == "float32" else np.float64
        self.main = QNetwork(self.vocab, layers=config.layers,
                             width=config.width, seed=config.seed, dtype=dtype)
        self.target = self.main.clone()
        self.buffer = ReplayBuffer(config.buffer_capacity,
                                   alpha=config.priority_alpha,
                                   beta=config.priority_beta,
                                   priority_eps=config.priority_eps)
        self.encoder = default_encoder(self.vocab)
        self.optimizer = make_optimizer(config.optimizer)
        self.lr_schedule = linear_schedule(config.lr_start, config.lr_end,
                                           config.lr_decay_episodes)
        self.temp_schedule = linear_schedule(config.temp_start, config.temp_end,
                                             config.temp_decay_episodes)
        self.variants = {p: make_variant(config.her, p, cap=config.lifting_cap)
                         for p in self.train_problems}
        self.history = []
        self._target_cache = {}
        if self.out_dir:
            (self.out_dir / "checkpoints").mkdir(parents=True, exist_ok=True)

    # -- experience generation -------------------------------------------

    def _generate_rollouts(self, episode, temperature):
        """Boltzmann rollouts, run in lockstep so each step is one batched
        forward pass. Per-rollout RNG streams keep the result identical to
        running the rollouts one by one."""
        cfg = self.cfg
        tasks = []
        for i in range(cfg.trajectories_per_episode):
            rng = rng_for(cfg.seed, "rollout", episode, i)
            problem = self.train_problems[
                int(rng.integers(len(self.train_problems)))]
            tasks.append((problem, rng))
        trajs = [Trajectory(p) for p, _ in tasks]
        states = [p.init for p, _ in tasks]
        active = []
        for traj, (p, _) in zip(trajs, tasks):
            done = p.goal <= p.init
            traj.achieved_goal = done
            active.append(not done)
        for _ in range(cfg.rollout_horizon):
            live = [i for i, a in enumerate(active) if a]
            if not live:
                break
            encs = []
            for i in live:
                problem = tasks[i][0]
                actions = applicable_actions(problem, states[i])
                encs.append(encode(problem, states[i], actions, problem.goal,
                                   self.vocab))
            batch = EncodedBatch(encs)
            per_graph = batch.split_per_graph(self.main.forward(batch))
            for enc, q, i in zip(encs, per_graph, live):
                problem, rng = tasks[i]
                probs = boltzmann_probs(q, temperature)
                action = enc.actions[int(rng.choice(len(enc.actions), p=probs))]
                nxt, reward, terminal = step(problem, states[i], action,
                                             problem.goal)
                trajs[i].transitions.append(Transition(
                    problem, states[i], action, reward, nxt, problem.goal))
                states[i] = nxt
                if terminal:
                    trajs[i].achieved_goal = True
                    active[i] = False
        return [(p, traj) for (p, _), traj in zip(tasks, trajs)]

    def _insert(self, transitions, inserted, goal_size, length):
        for tr in transitions:
            self.buffer.add(tr, self.encoder)
        inserted.append((goal_size, length))

    def run_episode(self, episode):
        cfg = self.cfg
        temperature = self.temp_schedule(episode)
        lr = self.lr_schedule(episode)
        inserted = []
        for i, (problem, traj) in enumerate(
                self._generate_rollouts(episode, temperature)):
            if not traj.transitions:
                continue
            if cfg.her == "none":
                self._insert(traj.transitions, inserted,
                             len(problem.goal), len(traj))
                continue
            if traj.achieved_goal and cfg.store_original:
                self._insert(traj.transitions, inserted,
                             len(problem.goal), len(traj))
            refine_rng = rng_for(cfg.seed, "refine", episode, i) \
                if cfg.random_grounding else None
            for piece in refine(self.variants[problem], traj, problem,
                                refine_rng):
                self._insert(piece.transitions, inserted,
                             len(piece.goal), len(piece))
        losses = []
        if len(self.buffer):
            rng = rng_for(cfg.seed, "optimize", episode)
            for _ in range(cfg.steps_per_episode):
                losses.append(self.optimize_step(lr, rng))
        if (episode + 1) % cfg.target_update_period == 0:
            self.target.copy_params_from(self.main)
            self._target_cache.clear()
        return EpisodeStats(
            episode=episode,
            mean_loss=float(np.mean(losses)) if losses else None,
            mean_goal_size=(sum(g for g, _ in inserted) / len(inserted)
                            if inserted else None),
            mean_traj_len=(sum(n for _, n in inserted) / len(inserted)
                           if inserted else None),
            buffer_size=len(self.buffer),
            temperature=temperature,
            lr=lr,
        )

    # -- optimization ------------------------------------------------------

    def _targets(self, entries):
        cfg = self.cfg
        ys = np.empty(len(entries), dtype=np.float64)
        pending = {}
        for j, entry in enumerate(entries):
            tr = entry.transition
            if tr.goal <= tr.next_state:
                ys[j] = tr.reward
                continue
            cached = self._target_cache.get(tr)
            if cached is not None:
                ys[j] = cached
            else:
                pending.setdefault(tr, []).append((j, entry))
        if pending:
            encs = []
            for tr, slots in pending.items():
                entry = slots[0][1]
                if entry.next_encoded is None:
                    entry.next_encoded = encode_current(
                        tr.problem, tr.next_state, tr.goal, self.vocab)
                encs.append(entry.next_encoded)
            batch = EncodedBatch(encs)
            q = self.target.forward(batch)
            for (tr, slots), q_graph in zip(pending.items(),
                                            batch.split_per_graph(q)):
                y = tr.reward + cfg.gamma * float(q_graph.max())
                self._target_cache[tr] = y
                for j, _ in slots:
                    ys[j] = y
        return ys

    def optimize_step(self, lr, rng):
        """One prioritized mini-batch step; returns the scalar loss.

        Samples drawn more than once are folded into a single graph with
        their weights combined, which leaves the loss and its gradient
        unchanged but keeps the batched forward pass small."""
        cfg = self.cfg
        idx, weights = self.buffer.sample(cfg.batch_size, rng)
        uniq, first, counts = np.unique(idx, return_index=True,
                                        return_counts=True)
        entries = [self.buffer.entries[i] for i in uniq]
        ys = self._targets(entries).astype(self.main.dtype)
        batch = EncodedBatch([entry.encoded for entry in entries])
        q, aux = self.main.forward(batch, train=True, rng=rng)
        rows = np.array(
            [batch.action_slices[g][0] + entry.action_index
             for g, entry in enumerate(entries)], dtype=np.int64)
        w = (counts * weights[first] / cfg.batch_size).astype(self.main.dtype)

        def readout_loss(values):
            q2 = ad.reshape(values, (batch.n_actions, 1))
            taken = ad.reshape(ad.gather_rows(q2, rows), (len(uniq),))
            residual = ad.sub_const(taken, ys)
            return residual, ad.weighted_sum(ad.huber(residual,
                                                      cfg.huber_delta), w)

        residual, loss = readout_loss(q)
        if aux is not None:
            loss = ad.add_scalar(loss, readout_loss(aux)[1])
        self.main.zero_grad()
        ad.backward(loss)
        self.optimizer.step(self.main.params, lr)
        self.buffer.update_priorities(uniq, residual.data.astype(np.float64))
        return float(loss.data)

    # -- evaluation and the full loop --------------------------------------

    def evaluate_checkpoint(self, episode):
        report = evaluate(self.main, self.val_problems,
                          EvalConfig(max_steps=self.cfg.eval_max_steps))
        path = ""
        if self.out_dir:
            path = str(self.out_dir / "checkpoints" / f"ep{episode + 1:04d}.ckpt")
            save_checkpoint(self.main, path, extra={
                "episode": episode + 1,
                "her": self.cfg.her,
                "gamma": self.cfg.gamma,
                "optimizer": self.cfg.optimizer,
                "train_seed": self.cfg.seed,
            })
        record = CheckpointRecord(episode + 1, report.coverage, report.total,
                                  path)
        self.history.append(record)
        log.info("episode %d: val coverage %d/%d, total length %d",
                 episode + 1, report.coverage, report.n, report.total)
        return record

    def run(self, metrics_path=None):
        cfg = self.cfg
        fh = open(metrics_path, "w", newline="", encoding="utf-8") \
            if metrics_path else None
        writer = None
        if fh:
            writer = csv.writer(fh)
            writer.writerow(METRICS_COLUMNS)
            fh.flush()
        last_eval = ("", "")
        stats_log = []

        def num(x):
            return "" if x is None else repr(float(x))

        try:
            for episode in range(cfg.episodes):
                stats = self.run_episode(episode)
                stats_log.append(stats)
                if self.val_problems and (episode + 1) % cfg.eval_period == 0:
                    record = self.evaluate_checkpoint(episode)
                    last_eval = (record.coverage, record.total_length)
                if writer:
                    writer.writerow([
                        stats.episode, num(stats.mean_loss),
                        num(stats.mean_goal_size), num(stats.mean_traj_len),
                        stats.buffer_size, num(stats.temperature),
                        num(stats.lr), last_eval[0], last_eval[1],
                    ])
                    fh.flush()
        finally:
            if fh:
                fh.close()
        best = None
        if self.history:
            best = select_checkpoint(self.history,
                                     rng_for(cfg.seed, "tiebreak"))
        return stats_log, best
