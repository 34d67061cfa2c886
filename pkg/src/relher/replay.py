"""Bounded FIFO replay buffer with proportional prioritized sampling."""

from __future__ import annotations

import numpy as np

from .planning import applicable_actions


class BufferEntry:
    """A stored transition plus cached encodings for the optimizer."""

    __slots__ = ("transition", "encoded", "action_index", "next_encoded")

    def __init__(self, transition, encoded, action_index):
        self.transition = transition
        self.encoded = encoded
        self.action_index = action_index
        self.next_encoded = None


class ReplayBuffer:
    """Capacity-bounded storage; sampling probability follows priority^alpha
    and importance weights are (N * P(i))^-beta normalized by the batch max."""

    def __init__(self, capacity=1000, alpha=0.6, beta=0.4,
                 priority_eps=1e-3, priority_floor=1.0):
        self.capacity = capacity
        self.alpha = alpha
        self.beta = beta
        self.priority_eps = priority_eps
        self.priority_floor = priority_floor
        self.entries = []
        self.priorities = np.zeros(capacity, dtype=np.float64)
        self._next = 0  # FIFO ring position

    def __len__(self):
        return len(self.entries)

    def max_priority(self):
        if not self.entries:
            return self.priority_floor
        return max(self.priority_floor,
                   float(self.priorities[:len(self.entries)].max()))

    def add(self, transition, encoder):
        """Insert with the current maximum priority. ``encoder`` maps a
        transition to its cached network input."""
        entry = BufferEntry(transition, *encoder(transition))
        priority = self.max_priority()
        if len(self.entries) < self.capacity:
            self.priorities[len(self.entries)] = priority
            self.entries.append(entry)
        else:
            self.entries[self._next] = entry
            self.priorities[self._next] = priority
            self._next = (self._next + 1) % self.capacity

    def sample(self, batch_size, rng):
        if not self.entries:
            raise ValueError("cannot sample from an empty replay buffer")
        n = len(self.entries)
        probs = self.priorities[:n] ** self.alpha
        probs /= probs.sum()
        idx = rng.choice(n, size=batch_size, replace=True, p=probs)
        weights = (n * probs[idx]) ** -self.beta
        weights /= weights.max()
        return idx, weights

    def update_priorities(self, idx, td_errors):
        self.priorities[idx] = np.abs(td_errors) + self.priority_eps


def default_encoder(vocab):
    """Encoder used for buffer entries: the input for (s, A(s), goal) plus
    the position of the taken action inside the applicable set."""
    from .qnet import encode

    def encoder(transition):
        problem = transition.problem
        actions = applicable_actions(problem, transition.state)
        enc = encode(problem, transition.state, actions, transition.goal, vocab)
        return enc, actions.index(transition.action)

    return encoder
