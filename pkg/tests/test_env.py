import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ecoedgetwin import costs
from ecoedgetwin.config import ScenarioConfig
from ecoedgetwin.env import (BETA_LEVELS, F_DATA, F_USER_DEV, N_GLOBAL, EdgeEnv, MdpAction,
                             action_count, dt_feature_indices, state_dim)
from ecoedgetwin.errors import DataError, LifecycleError
from ecoedgetwin.mobility import Trajectory
from ecoedgetwin.model import EdgeServer, Scenario, build_scenario


@pytest.fixture
def env():
    return EdgeEnv(build_scenario(ScenarioConfig.desk(), 0), max_steps=50)


def test_dimensions():
    assert state_dim(5) == 12 + 25
    assert action_count(5) == 6 * 5 * 2 * 2 == 120
    assert len(set(dt_feature_indices(5))) == 5 + 5


@given(i=st.integers(0, action_count(5) - 1))
def test_action_index_roundtrip(i):
    a = MdpAction.from_index(i, 5)
    assert MdpAction.from_index(a.index(5), 5) == a
    if a.target == 0:
        # local indices with a nonzero beta slot alias the beta = 0 action
        assert a.beta_level == 0.0 and a.alpha == 1.0
    else:
        assert a.index(5) == i


def test_action_validation():
    assert MdpAction(0, 0.5).beta_level == 0.0
    with pytest.raises(ValueError):
        MdpAction(1, 0.3)
    with pytest.raises(ValueError):
        MdpAction.from_index(action_count(5), 5)


def test_step_before_reset(env):
    with pytest.raises(LifecycleError):
        env.step(0)


def test_reset_determinism_and_bounds(env):
    a, b = env.reset(9), env.reset(9)
    assert np.array_equal(a.features, b.features)
    assert a.features.shape == (state_dim(5),)
    assert np.all(np.abs(a.features) <= 1) and np.all(np.isfinite(a.features))
    assert not np.array_equal(env.reset(10).features, a.features)


def test_task_sampling_bounds(env):
    env.reset(0)
    cfg = env.cfg
    lo, hi = cfg.data_size_range_bits
    clo, chi = cfg.cycles_per_bit_range
    for _ in range(10_000):
        t = env._sample_task(0)
        assert lo <= t.data_bits <= hi
        assert clo * t.data_bits <= t.cpu_cycles <= chi * t.data_bits


def test_zero_servers_pads_candidate_slots():
    e = EdgeEnv(build_scenario(ScenarioConfig(area_side_km=1, server_density=0, user_count=2)))
    s = e.reset(0)
    assert np.all(s.features[N_GLOBAL:] == 0)
    out = e.step(MdpAction(3, 1.0).index(e.k))  # no candidate -> runs locally
    assert out.cost.offloaded_bits == 0 and out.info["server"] is None


def test_local_action_has_no_edge_costs(env):
    env.reset(0)
    out = env.step(MdpAction(0).index(env.k))
    e, lat = out.cost.energy, out.cost.latency
    assert e.edge_compute_j == e.comm_j == e.updown_j == 0.0
    assert lat.edge_s == lat.edge_gap_s == lat.queue_s == 0.0
    assert out.cost.migration_cost == 0.0


def test_reward_is_clipped_negated_objective(env):
    env.reset(3)
    rng = np.random.default_rng(0)
    for _ in range(300):
        out = env.step(int(rng.integers(env.n_actions)))
        assert out.reward == -min(out.cost.objective, env.cfg.reward_clip)
    raw = EdgeEnv(build_scenario(ScenarioConfig.desk(reward_clip=None), 0))
    raw.reset(3)
    for _ in range(300):
        out = raw.step(int(rng.integers(raw.n_actions)))
        assert out.reward + out.cost.objective == 0.0


def test_objective_matches_cost_models(env):
    env.reset(1)
    out = env.step(MdpAction(1, 0.5, dt_adjust=True).index(env.k))
    c, cfg = out.cost, env.cfg
    assert c.latency_norm == c.latency.total_s / cfg.latency_max_s
    assert c.energy_norm == c.energy.total_j / cfg.reference_energy_j
    assert c.energy.dt_overhead_j == cfg.dt_energy_per_prediction_j
    assert c.objective == costs.objective_value(c.latency_norm, c.energy_norm, c.qoe.value, cfg.weights)


def test_episode_length_and_round_robin(env):
    env.reset(0)
    users = []
    for t in range(50):
        out = env.step(0)
        users.append(out.info["user"])
        assert out.done == (t == 49)
    assert users[:12] == [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 0, 1]


def test_determinism_for_action_sequence():
    def run():
        e = EdgeEnv(build_scenario(ScenarioConfig.desk(), 2))
        e.reset(5)
        return [(o.reward, o.next_state.features.tobytes()) for o in
                (e.step(a) for a in range(0, 120, 3))]
    assert run() == run()


def test_migration_flag_matches_history():
    e = EdgeEnv(build_scenario(ScenarioConfig.desk(), 0), speed_kmh=60.0, max_steps=2000)
    e.reset(0)
    for _ in range(2000):
        e.step(MdpAction(1, 1.0).index(e.k))
    last = {}
    n_users = len(e.scenario.users)
    for j in range(n_users):
        last[j] = e._anchor(e.scenario.users[j].position)
    for rec in e.history:
        j = rec["user"]
        assert rec["migrated"] == int(rec["anchor"] != last[j])
        last[j] = rec["anchor"]
    assert sum(r["migrated"] for r in e.history) > 0


def _two_server_env():
    cfg = ScenarioConfig(area_side_km=1.0, server_density=2.0, user_count=1,
                         user_speed_range_kmh=(36.0, 36.0))
    base = build_scenario(cfg, 0)
    servers = (replace(base.servers[0], position=(0.25, 0.5)), replace(base.servers[1], position=(0.75, 0.5)))
    user = replace(base.users[0], position=(0.45, 0.5))
    e = EdgeEnv(Scenario(cfg, servers, (user,), base.dt), max_steps=100)
    return e


def test_crossing_between_two_servers_triggers_one_migration():
    e = _two_server_env()
    e.reset(0)
    e.waypoints = [(0.95, 0.5)]  # straight line east at 10 m per slot
    flags, costs_ = [], []
    for _ in range(20):
        pos = e.pos[0]
        out = e.step(MdpAction(1, 1.0).index(e.k))
        flags.append((pos[0], out.cost.migrated, out.cost.migration_cost, out.cost.offloaded_bits))
    crossings = [f for f in flags if f[1]]
    assert len(crossings) == 1
    x, _, mig, bits = crossings[0]
    assert x > 0.5  # first decision after the midpoint
    assert mig == pytest.approx(bits * e.cfg.migration_fixed_cost, rel=1e-12)
    assert all(f[2] == 0.0 for f in flags if not f[1])


def test_cache_hit_waives_migration():
    e = _two_server_env()
    e.reset(0)
    e.cached_at[0] = 1
    e.waypoints = [(0.95, 0.5)]
    for _ in range(20):
        out = e.step(MdpAction(1, 1.0).index(e.k))
        if out.cost.migrated:
            assert out.cost.cache_hit and out.cost.migration_cost == 0.0
            break
    else:
        pytest.fail("no crossing")


def test_infeasible_cache_is_flagged_not_fatal(env):
    env.reset(0)
    out = env.step(MdpAction(0, cache=True).index(env.k))
    assert out.cost.cache_violation
    out = env.step(MdpAction(1, 1.0, cache=True).index(env.k))
    assert not out.done


def test_dt_adjust_refreshes_visible_deviation():
    e = EdgeEnv(build_scenario(ScenarioConfig.desk(dt_drift=0.1), 0))
    e.reset(0)
    for _ in range(30):
        e.step(0)
    assert not np.allclose(e.vis_usr, e.r_usr)
    truth = e.r_usr.copy()
    out = e.step(MdpAction(0, dt_adjust=True).index(e.k))
    # the snapshot is the truth at decision time; the world drifts afterwards
    assert np.array_equal(e.vis_usr, truth)
    assert out.next_state.features[F_USER_DEV] == truth[out.next_state.user]
    assert out.cost.energy.dt_overhead_j == e.cfg.dt_energy_per_prediction_j


def test_trajectory_mobility_replays_positions():
    t = Trajectory("a", ((0.0, 0, 0), (10.0, 1, 1)), np.arange(11.0),
                   np.column_stack([np.linspace(0, 1, 11), np.linspace(0, 1, 11)]))
    e = EdgeEnv(build_scenario(ScenarioConfig(area_side_km=1, server_density=4, user_count=2), 0),
                mobility=[t])
    e.reset(0)
    assert e.pos[0] == (0.0, 0.0)
    e.step(0)
    assert e.pos[1] == pytest.approx((0.1, 0.1))
    assert e.speed[0] == pytest.approx(math.hypot(0.1, 0.1) * 3600)
    with pytest.raises(DataError):
        EdgeEnv(e.scenario, mobility=[])


def test_migrations_nondecreasing_in_speed():
    sc = build_scenario(ScenarioConfig.desk(), 0)
    means = []
    for v in (0, 20, 40, 60):
        e = EdgeEnv(sc, speed_kmh=v)
        total = 0
        for ep in range(10):
            e.reset(ep)
            total += sum(e.step(0).cost.migrated for _ in range(50))
        means.append(total / 10)
    assert means[0] == 0
    assert all(a <= b for a, b in zip(means, means[1:]))


def test_state_features_normalized(env):
    s = env.reset(0)
    assert s.features[F_DATA] == env.tasks[0].data_bits / env.cfg.data_ref_bits
