import numpy as np
from hypothesis import given, strategies as st

from ecoedgetwin.baseline import BaselineMask, masked_features, wrap_benchmark
from ecoedgetwin.config import ScenarioConfig
from ecoedgetwin.env import EdgeEnv, MdpAction, action_count, dt_feature_indices, state_dim
from ecoedgetwin.model import build_scenario

K = ScenarioConfig.desk().candidate_servers


def make(dt_error_mean=None):
    cfg = ScenarioConfig.desk() if dt_error_mean is None else ScenarioConfig.desk(dt_error_mean=dt_error_mean)
    return EdgeEnv(build_scenario(cfg, 0), max_steps=30)


@given(st.lists(st.floats(-1, 1), min_size=state_dim(K), max_size=state_dim(K)))
def test_mask_zeroes_exactly_the_twin_entries(values):
    x = np.array(values)
    y = masked_features(x, K)
    dt = set(dt_feature_indices(K))
    assert len(y) == len(x)
    assert all(y[i] == 0.0 for i in dt)
    assert all(y[i] == x[i] for i in range(len(x)) if i not in dt)


def test_benchmark_state_is_blind_to_twin_deviation():
    a, b = wrap_benchmark(make(0.2)), wrap_benchmark(make(0.6))
    sa, sb = a.reset(3), b.reset(3)
    assert np.array_equal(sa.features, sb.features)
    rng = np.random.default_rng(0)
    for _ in range(20):
        act = int(rng.integers(action_count(K)))
        oa, ob = a.step(act), b.step(act)
        assert np.array_equal(oa.next_state.features, ob.next_state.features)
    # the unmasked states do differ
    assert not np.array_equal(make(0.2).reset(3).features, make(0.6).reset(3).features)


def test_same_physics_without_twin_adjustment():
    plain, bench = make(), wrap_benchmark(make())
    plain.reset(5), bench.reset(5)
    rng = np.random.default_rng(1)
    for _ in range(30):
        act = MdpAction.from_index(int(rng.integers(action_count(K))), K)
        act = MdpAction(act.target, act.beta_level, act.cache, False)
        op, ob = plain.step(act), bench.step(act)
        assert op.reward == ob.reward
        assert op.cost.energy.total_j == ob.cost.energy.total_j


def test_twin_adjustment_is_disabled():
    bench = wrap_benchmark(make())
    bench.reset(0)
    out = bench.step(MdpAction(1, 0.5, False, True))
    assert out.info["dt_used"] is False
    assert out.cost.energy.dt_overhead_j == 0.0
    plain = make()
    plain.reset(0)
    assert plain.step(MdpAction(1, 0.5, False, True)).cost.energy.dt_overhead_j > 0.0


def test_mask_constructor_matches_indices():
    assert BaselineMask.for_candidates(K).indices == tuple(dt_feature_indices(K))
