import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ecoedgetwin.channel import ChannelState, path_loss, sample_channel, snr, transmission_rate
from ecoedgetwin.errors import DomainError


def test_path_loss_examples():
    assert path_loss(1.0) == 1.0
    assert path_loss(10.0, 2.0) == pytest.approx(0.01, rel=1e-12)


def test_sample_channel_determinism_and_domain():
    a = sample_channel(50.0, np.random.default_rng(4))
    b = sample_channel(50.0, np.random.default_rng(4))
    assert a == b
    assert math.isclose(a.coefficient ** 2, a.path_loss * a.fading, rel_tol=1e-12)
    for d in (0.0, -1.0, float("nan")):
        with pytest.raises(DomainError):
            sample_channel(d, np.random.default_rng(0))


def test_fading_has_unit_mean():
    rng = np.random.default_rng(0)
    s = [sample_channel(10.0, rng).fading for _ in range(20000)]
    assert abs(np.mean(s) - 1.0) < 0.03


def test_rate_examples():
    ch = ChannelState(2.0, 1.0, 1.0)
    assert transmission_rate(0.2, ch, 1e-12, 20e6, associated=0) == 0.0
    assert transmission_rate(0.0, ch, 1e-12, 20e6) == 0.0
    # p |rho|^2 / (d sigma^2) = 1
    assert transmission_rate(2.0, ch, 1.0, 20e6) == pytest.approx(2.0e7, rel=1e-12)
    # path-loss-only variant drops the 1/d factor
    assert transmission_rate(1.0, ch, 1.0, 20e6, literal=False) == pytest.approx(2.0e7, rel=1e-12)


def test_rate_rejects_bad_inputs():
    ch = ChannelState(2.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        transmission_rate(float("inf"), ch, 1.0, 1.0)
    with pytest.raises(DomainError):
        transmission_rate(1.0, ch, 0.0, 1.0)


chan = st.tuples(st.floats(1.0, 5000.0), st.floats(1e-12, 1.0), st.floats(0.0, 10.0))


@given(c=chan, p=st.floats(0, 1), p2=st.floats(0, 1), s2=st.floats(1e-14, 1e-9), s3=st.floats(1e-14, 1e-9),
       k=st.floats(1.01, 3))
def test_rate_monotonicity(c, p, p2, s2, s3, k):
    d, g, s = c
    base = ChannelState(d, g, s)
    rate = lambda **kw: transmission_rate(kw.get("p", p), kw.get("ch", base), kw.get("s2", s2), 20e6)
    r = rate()
    assert r >= 0
    lo, hi = sorted((p, p2))
    assert rate(p=lo) <= rate(p=hi)
    assert rate(ch=ChannelState(d, g, s * k)) >= r
    assert rate(ch=ChannelState(d * k, g, s)) <= r
    lo2, hi2 = sorted((s2, s3))
    assert rate(s2=lo2) >= rate(s2=hi2)


@given(c=chan, b=st.floats(1e3, 1e9), m=st.floats(0.1, 10))
def test_rate_linear_in_bandwidth(c, b, m):
    ch = ChannelState(*c)
    assert math.isclose(transmission_rate(0.3, ch, 2e-12, b * m), m * transmission_rate(0.3, ch, 2e-12, b),
                        rel_tol=1e-9, abs_tol=1e-300)


def test_snr_vectorizes():
    out = snr(np.array([0.2, 0.4]), 1.0, 2.0, 1.0)
    assert np.allclose(out, [0.1, 0.2])
