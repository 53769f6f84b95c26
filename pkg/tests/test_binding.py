import math

import numpy as np
import pytest

from oectlink.binding import (OccupancyState, effective_on_rate,
                              mean_occupancy_step, occupancy_trajectory,
                              stochastic_occupancy_step)
from oectlink.config import Species, SpeciesChannel, baseline_scenario


def make_channel(**kw):
    base = dict(name=Species.DA, d_aq=4.9e-10, k_on=1e5, k_off=0.015,
                n_apt=200_000_000, q_eff=-0.35)
    base.update(kw)
    return SpeciesChannel(**base)


def test_effective_on_rate():
    assert effective_on_rate(1e5, 0.0) == 1e5
    assert effective_on_rate(1e5, 1.0) == 5e4
    assert effective_on_rate(1e5, 9.0) == 1e4


def test_mean_step_no_dynamics():
    ch = make_channel(k_off=0.0)
    assert mean_occupancy_step(123.0, 0.0, 0.01, ch) == 123.0


def test_mean_fixed_point_is_langmuir():
    # iterate to steady state under constant c; compare with N c/(c + K_d)
    ch = make_channel()
    c = 5e-8
    nb = 0.0
    for _ in range(400_000):
        nb = mean_occupancy_step(nb, c, 0.01, ch)
    expected = ch.n_apt * c / (c + ch.k_d)
    assert nb == pytest.approx(expected, rel=1e-4)


def test_mean_fixed_point_at_kd():
    # c = K_d gives half occupancy; baseline K_d values are 150 nM / 30 nM
    scn = baseline_scenario()
    da, fht = scn.selective_channels
    assert da.k_d == pytest.approx(1.5e-7)
    assert fht.k_d == pytest.approx(3.0e-8)
    nb = 0.0
    for _ in range(600_000):
        nb = mean_occupancy_step(nb, da.k_d, 0.01, da)
    assert nb == pytest.approx(da.n_apt / 2, rel=1e-4)


def test_mean_step_clamps():
    ch = make_channel(n_apt=100)
    assert mean_occupancy_step(100.0, 1.0, 10.0, ch) <= 100.0
    assert mean_occupancy_step(0.0, 0.0, 10.0, ch) == 0.0


def test_stochastic_ctrl_stays_zero(rng):
    ctrl = SpeciesChannel(Species.CTRL, d_aq=4.9e-10, k_on=0.0, k_off=0.0,
                          n_apt=0, q_eff=0.0)
    state = OccupancyState(0, ctrl)
    for _ in range(10):
        state = stochastic_occupancy_step(state, 1e-6, 0.01, rng)
    assert state.n_bound == 0


def test_stochastic_frozen_when_no_rates(rng):
    ch = make_channel(k_off=0.0)
    state = OccupancyState(1000, ch)
    out = stochastic_occupancy_step(state, 0.0, 0.01, rng)
    assert out.n_bound == 1000


def test_stochastic_matches_mean_step(rng):
    # expectation consistency at dt=0.01 over 1e5 replicates, 3 sigma band
    ch = make_channel(n_apt=50_000)
    c = ch.k_d
    n_rep = 100_000
    p_on = -math.expm1(-ch.k_on_eff * c * 0.01)
    p_off = -math.expm1(-ch.k_off * 0.01)
    nb0 = 20_000
    gained = rng.binomial(ch.n_apt - nb0, p_on, size=n_rep)
    lost = rng.binomial(nb0, p_off, size=n_rep)
    mc_mean = np.mean(nb0 + gained - lost)
    euler = mean_occupancy_step(float(nb0), c, 0.01, ch)
    sd = np.std(nb0 + gained - lost) / math.sqrt(n_rep)
    assert abs(mc_mean - euler) < 3 * sd + 0.2


def test_stochastic_stationary_mean_small_sites(rng):
    ch = make_channel(n_apt=5_000, k_off=0.5)
    c = ch.k_d
    traj = occupancy_trajectory(np.full(60_000, c), 0.01, ch, rng)
    mean = traj[10_000:].mean()
    assert mean == pytest.approx(ch.n_apt / 2, rel=0.02)


def test_determinism():
    ch = make_channel()
    conc = np.full(500, 1e-9)
    a = occupancy_trajectory(conc, 0.01, ch,
                             np.random.Generator(np.random.Philox(5)))
    b = occupancy_trajectory(conc, 0.01, ch,
                             np.random.Generator(np.random.Philox(5)))
    assert np.array_equal(a, b)


def test_bounds_always_hold(rng):
    ch = make_channel(n_apt=50)
    conc = 10 ** rng.uniform(-9, -3, size=2000)
    traj = occupancy_trajectory(conc, 0.01, ch, rng)
    assert traj.min() >= 0 and traj.max() <= 50


def test_occupancy_state_validation():
    ch = make_channel(n_apt=10)
    with pytest.raises(Exception):
        OccupancyState(11, ch)
    ctrl = SpeciesChannel(Species.CTRL, d_aq=4.9e-10, k_on=0.0, k_off=0.0,
                          n_apt=5, q_eff=0.0)
    with pytest.raises(Exception):
        OccupancyState(1, ctrl)
