"""Tiny environments with known optimal behaviour, used to validate the trainer."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ToyOutcome:
    next_state: np.ndarray
    reward: float
    done: bool
    cost: None = None
    info: dict = field(default_factory=dict)


class BanditEnv:
    """One-step episodes with a constant observation; action ``a`` pays ``rewards[a]``."""

    def __init__(self, rewards=(0.0, 1.0)):
        self.rewards = tuple(float(r) for r in rewards)
        self.n_actions = len(self.rewards)
        self.state_dim = 1
        self._obs = np.ones(1)

    def reset(self, seed: int = 0) -> np.ndarray:
        return self._obs

    def step(self, action: int) -> ToyOutcome:
        return ToyOutcome(self._obs, self.rewards[int(action)], True)

    @property
    def best_action(self) -> int:
        return int(np.argmax(self.rewards))


class ConstantRewardEnv:
    """Single action, reward ``r`` every step, never terminal: V = r / (1 - gamma)."""

    def __init__(self, reward: float = 1.0):
        self.reward = float(reward)
        self.n_actions = 1
        self.state_dim = 1
        self._obs = np.ones(1)

    def reset(self, seed: int = 0) -> np.ndarray:
        return self._obs

    def step(self, action: int) -> ToyOutcome:
        return ToyOutcome(self._obs, self.reward, False)
