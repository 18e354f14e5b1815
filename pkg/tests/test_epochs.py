import pytest
from hypothesis import given, strategies as st

from collsched.epochs import (EpochConfig, compute_delta, epoch_duration,
                              kappa, max_kappa)
from collsched.errors import ValidationError
from collsched.topology import Edge, dgx1, line


def test_delta_zero_latency():
    assert compute_delta(Edge("a", "b", 1.0, 0.0), 0.5) == 0


def test_delta_ndv2_alpha_on_fast_epochs():
    # 0.7us latency over 0.5us epochs rounds up to 2
    assert compute_delta(Edge("a", "b", 50e9, 0.7e-6), 0.5e-6) == 2


def test_delta_exact_multiple():
    assert compute_delta(Edge("a", "b", 1.0, 1.3e-6), 1.3e-6) == 1


def test_epoch_duration_dgx1():
    t = dgx1()
    assert epoch_duration(t, 25000, "fastest", 1) == pytest.approx(0.5e-6)
    assert epoch_duration(t, 25000, "slowest", 1) == pytest.approx(1.0e-6)


def test_epoch_duration_uniform_links():
    t = line(3, capacity=1.0)
    assert epoch_duration(t, 1, "fastest", 1) == 1.0
    assert epoch_duration(t, 1, "slowest", 1) == 1.0


def test_epoch_duration_multiplier():
    t = dgx1()
    assert epoch_duration(t, 25000, "fastest", 5) == pytest.approx(2.5e-6)


def test_kappa_ladder():
    cfg = EpochConfig(0.5e-6, 4, "fastest", 1, 25000)
    assert kappa(Edge("a", "b", 50e9), cfg) == 1  # fastest link: plain capacity
    assert kappa(Edge("a", "b", 25e9), cfg) == 2  # half speed: 1 chunk per 2 epochs
    assert kappa(Edge("a", "b", 12.5e9), cfg) == 4  # quarter speed
    assert max_kappa(dgx1(), cfg) == 2


def test_kappa_is_mode_independent_arithmetic():
    # 12.5 GBps moves half a 25 KB chunk per 1us epoch regardless of mode
    cfg = EpochConfig(1e-6, 4, "slowest", 1, 25000)
    assert kappa(Edge("a", "b", 12.5e9), cfg) == 2


def test_epoch_config_validation():
    with pytest.raises(ValidationError):
        EpochConfig(0.0, 4)
    with pytest.raises(ValidationError):
        EpochConfig(1.0, 0)
    with pytest.raises(ValidationError):
        EpochConfig(1.0, 4, epoch_multiplier=0)
    with pytest.raises(ValidationError):
        EpochConfig(1.0, 4, duration_mode="sideways")


@given(alpha=st.floats(0, 1e-3), tau_a=st.floats(1e-9, 1e-3), tau_b=st.floats(1e-9, 1e-3))
def test_delta_monotone_in_tau(alpha, tau_a, tau_b):
    lo, hi = sorted([tau_a, tau_b])
    e = Edge("a", "b", 1.0, alpha)
    assert compute_delta(e, lo) >= compute_delta(e, hi)


@given(alpha_a=st.floats(0, 1e-3), alpha_b=st.floats(0, 1e-3), tau=st.floats(1e-9, 1e-3))
def test_delta_monotone_in_alpha(alpha_a, alpha_b, tau):
    lo, hi = sorted([alpha_a, alpha_b])
    assert compute_delta(Edge("a", "b", 1.0, lo), tau) <= \
        compute_delta(Edge("a", "b", 1.0, hi), tau)
