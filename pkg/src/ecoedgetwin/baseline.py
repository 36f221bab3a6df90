"""Benchmark arm: the same environment with the digital-twin information removed.

The agent-visible state has its DT entries zero-filled (length unchanged, so checkpoints stay
shape-compatible) and ``dt_adjust`` becomes a no-op. Physical dynamics and costs are untouched.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .env import EdgeEnv, MdpAction, MdpState, StepOutcome, dt_feature_indices


@dataclass(frozen=True)
class BaselineMask:
    indices: tuple[int, ...]

    @classmethod
    def for_candidates(cls, k: int) -> "BaselineMask":
        return cls(tuple(dt_feature_indices(k)))

    def apply(self, state: MdpState) -> MdpState:
        feats = state.features.copy()
        feats[list(self.indices)] = 0.0
        return MdpState(feats, state.user)


class BenchmarkEnv:
    def __init__(self, env: EdgeEnv):
        self.env = env
        self.mask = BaselineMask.for_candidates(env.k)
        self.n_actions = env.n_actions
        self.state_dim = env.state_dim
        self.k = env.k

    def __getattr__(self, name):
        return getattr(self.env, name)

    def reset(self, seed: int = 0) -> MdpState:
        return self.mask.apply(self.env.reset(seed))

    def remap(self, action) -> MdpAction:
        a = action if isinstance(action, MdpAction) else MdpAction.from_index(int(action), self.k)
        return replace(a, dt_adjust=False)

    def step(self, action) -> StepOutcome:
        out = self.env.step(self.remap(action))
        return replace(out, next_state=self.mask.apply(out.next_state))


def wrap_benchmark(env: EdgeEnv) -> BenchmarkEnv:
    return BenchmarkEnv(env)


def masked_features(features: np.ndarray, k: int) -> np.ndarray:
    return BaselineMask.for_candidates(k).apply(MdpState(np.asarray(features, float), -1)).features
