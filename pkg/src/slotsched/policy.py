"""Two-action scheduling policy: a from-scratch MLP trained by reward-weighted updates.

Architecture: 135 inputs -> 128 ReLU -> 32 ReLU -> 2-way softmax
(index 0 = schedule, index 1 = defer). One training step minimises

    L = - sum_t  r_t * log pi(a_t | s_t)

over a batch of experiences with Adam. A +1 reward is binary cross-entropy
against the taken action; a -1 reward is the sign-flipped term that pushes the
taken action's probability down.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .gradcheck import max_gradient_error
from .optim import Adam

INPUT_SIZE = 135
HIDDEN_SIZES = (128, 32)
NUM_ACTIONS = 2
PROB_CLIP = 1e-8

DEFAULT_LEARNING_RATE = 1e-3


@dataclass
class Experience:
    """One agent decision: encoded state, taken action, reward, position."""

    state: np.ndarray
    action: int
    reward: float = 0.0
    episode: int = 0
    timestep: int = 0
    # bookkeeping for stats, not part of the learning signal
    meeting_id: int = 0
    duration: int = 0
    proposed_slot: int = -1
    designation: str = ""
    outcome: str = ""
    drain: bool = False


def _he_uniform(rng: np.random.Generator, fan_out: int, fan_in: int, gain: float = 1.0) -> np.ndarray:
    bound = gain * np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=(fan_out, fan_in))


# The action head starts with tiny weights so a fresh policy is near-uniform
# for every seed, not just on average; a seed whose initial logits lean toward
# defer otherwise enters the all-negative early-reward regime where the
# exploration ratchet can lock it into never scheduling.
OUTPUT_GAIN = 0.01


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


class PolicyNet:
    """Weights, Adam state and the forward/backward passes."""

    def __init__(self, seed: int = 0, learning_rate: float = DEFAULT_LEARNING_RATE) -> None:
        rng = np.random.default_rng(seed)
        h1, h2 = HIDDEN_SIZES
        self.params: dict[str, np.ndarray] = {
            "W1": _he_uniform(rng, h1, INPUT_SIZE),
            "b1": np.zeros(h1),
            "W2": _he_uniform(rng, h2, h1),
            "b2": np.zeros(h2),
            "W3": _he_uniform(rng, NUM_ACTIONS, h2, gain=OUTPUT_GAIN),
            "b3": np.zeros(NUM_ACTIONS),
        }
        self.optimizer = Adam(self.params, learning_rate=learning_rate)

    # -- forward -------------------------------------------------------------

    def forward(self, state: np.ndarray) -> np.ndarray:
        """Action distribution (p_schedule, p_defer) for one 135-vector."""
        state = np.asarray(state, dtype=np.float64)
        if state.shape != (INPUT_SIZE,):
            raise ValueError(f"state must have shape ({INPUT_SIZE},), got {state.shape}")
        return self.forward_batch(state[None, :])[0]

    def forward_batch(self, states: np.ndarray) -> np.ndarray:
        p = self.params
        a1 = np.maximum(states @ p["W1"].T + p["b1"], 0.0)
        a2 = np.maximum(a1 @ p["W2"].T + p["b2"], 0.0)
        return _softmax(a2 @ p["W3"].T + p["b3"])

    # -- loss and gradients ----------------------------------------------------

    def _stack(self, batch: Sequence[Experience]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        states = np.stack([np.asarray(e.state, dtype=np.float64) for e in batch])
        actions = np.array([e.action for e in batch], dtype=np.int64)
        rewards = np.array([e.reward for e in batch], dtype=np.float64)
        return states, actions, rewards

    def loss(self, batch: Sequence[Experience]) -> float:
        states, actions, rewards = self._stack(batch)
        probs = self.forward_batch(states)
        taken = probs[np.arange(len(batch)), actions]
        taken = np.clip(taken, PROB_CLIP, 1.0 - PROB_CLIP)
        return float(-(rewards * np.log(taken)).sum())

    def loss_and_grads(self, batch: Sequence[Experience]) -> tuple[float, dict[str, np.ndarray]]:
        p = self.params
        states, actions, rewards = self._stack(batch)
        z1 = states @ p["W1"].T + p["b1"]
        a1 = np.maximum(z1, 0.0)
        z2 = a1 @ p["W2"].T + p["b2"]
        a2 = np.maximum(z2, 0.0)
        probs = _softmax(a2 @ p["W3"].T + p["b3"])

        n = len(batch)
        taken = np.clip(probs[np.arange(n), actions], PROB_CLIP, 1.0 - PROB_CLIP)
        loss = float(-(rewards * np.log(taken)).sum())

        onehot = np.zeros_like(probs)
        onehot[np.arange(n), actions] = 1.0
        dz3 = rewards[:, None] * (probs - onehot)  # d(-r log p_a)/dz
        da2 = dz3 @ p["W3"]
        dz2 = da2 * (z2 > 0.0)
        da1 = dz2 @ p["W2"]
        dz1 = da1 * (z1 > 0.0)
        grads = {
            "W3": dz3.T @ a2,
            "b3": dz3.sum(axis=0),
            "W2": dz2.T @ a1,
            "b2": dz2.sum(axis=0),
            "W1": dz1.T @ states,
            "b1": dz1.sum(axis=0),
        }
        return loss, grads

    # -- training ---------------------------------------------------------------

    def reinforce_update(self, batch: Sequence[Experience], learning_rate: Optional[float] = None) -> float:
        """One Adam step over the batch; returns the pre-step loss. Empty batch is a no-op."""
        if not batch:
            return 0.0
        loss, grads = self.loss_and_grads(batch)
        if not np.isfinite(loss) or any(not np.isfinite(g).all() for g in grads.values()):
            raise FloatingPointError(f"non-finite policy gradient (loss={loss})")
        if learning_rate is not None:
            self.optimizer.learning_rate = learning_rate
        self.optimizer.step(self.params, grads)
        return loss

    def gradient_check(
        self,
        batch: Sequence[Experience],
        rng: Optional[np.random.Generator] = None,
        n_samples: int = 200,
    ) -> float:
        """Max relative error of the analytic gradient vs central differences."""
        rng = rng or np.random.default_rng(0)
        _, grads = self.loss_and_grads(batch)
        return max_gradient_error(self.params, grads, lambda: self.loss(batch), rng, n_samples)

    # -- persistence --------------------------------------------------------------

    def arrays(self) -> dict[str, np.ndarray]:
        out = dict(self.params)
        out.update(self.optimizer.state_arrays())
        return out

    def meta(self) -> dict:
        return {
            "kind": "policy",
            "layer_sizes": [INPUT_SIZE, *HIDDEN_SIZES, NUM_ACTIONS],
            "adam_step": self.optimizer.step_count,
            "learning_rate": self.optimizer.learning_rate,
        }

    @classmethod
    def from_arrays(cls, meta: dict, arrays: dict[str, np.ndarray]) -> "PolicyNet":
        expected = [INPUT_SIZE, *HIDDEN_SIZES, NUM_ACTIONS]
        if meta.get("layer_sizes") != expected:
            raise ValueError(f"checkpoint layer sizes {meta.get('layer_sizes')} != {expected}")
        net = cls(seed=0, learning_rate=float(meta.get("learning_rate", DEFAULT_LEARNING_RATE)))
        for k in net.params:
            net.params[k] = arrays[k]
        net.optimizer = Adam(net.params, learning_rate=net.optimizer.learning_rate)
        net.optimizer.load_state_arrays(arrays, int(meta.get("adam_step", 0)))
        return net
