import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phevdemand.analytic import SessionModel, fold_to_day
from phevdemand.distributions import RandomStream, new_gaussian, new_uniform
from phevdemand.montecarlo import (
    ChargingSession,
    PartialHistogram,
    deposit_session,
    deposit_sessions,
    merge_partials,
    sample_session,
    sample_sessions,
    simulate,
    simulate_block,
)
from phevdemand.profile import GridMismatchError, daily_energy, make_grid


def one(t0, T, a, resolution=1.0):
    h = PartialHistogram.empty(make_grid(resolution))
    return deposit_session(h, ChargingSession(t0, T, a))


def test_deposit_aligned_session():
    h = one(19.0, 2.0, 1.4)
    expected = np.zeros(24)
    expected[19:21] = 1.4
    np.testing.assert_array_equal(h.sum, expected)
    assert h.count == 1


def test_deposit_wraps_past_midnight():
    h = one(23.5, 1.0, 1.0)
    assert h.sum[23] == 0.5
    assert h.sum[0] == 0.5
    assert h.sum.sum() == 1.0


@pytest.mark.parametrize("t0, T", [(3.3, 30.0), (-5.25, 49.9), (100.0, 24.0), (23.99, 0.02)])
def test_deposit_energy_is_exact(t0, T):
    h = one(t0, T, 1.4, 0.05)
    assert h.sum.sum() * 0.05 == pytest.approx(1.4 * T, rel=1e-13)
    assert h.energy == 1.4 * T


def test_long_session_covers_every_bin():
    h = one(7.0, 30.0, 2.0)
    # 24 h of full coverage plus the 6 h from 07:00 to 13:00 a second time
    assert np.all(h.sum[7:13] == 4.0)
    assert np.all(np.delete(h.sum, range(7, 13)) == 2.0)


def test_negative_arrival_folds_onto_clock():
    np.testing.assert_array_equal(one(-5.0, 2.0, 1.0).sum, one(19.0, 2.0, 1.0).sum)


@given(st.floats(-100, 100), st.floats(0, 60), st.floats(0.1, 20))
@settings(max_examples=80)
def test_deposit_energy_property(t0, T, a):
    h = one(t0, T, a, 0.25)
    assert h.sum.sum() * 0.25 == pytest.approx(a * T, rel=1e-12, abs=1e-12)
    assert np.all(h.sum >= 0)


def test_session_validation():
    with pytest.raises(ValueError):
        ChargingSession(1.0, -0.1, 1.0)
    with pytest.raises(ValueError):
        ChargingSession(1.0, 1.0, 0.0)


def test_sample_session_respects_support():
    model = SessionModel(new_gaussian(19, 10), new_uniform(2.0, 2.0 + 1e-9), 1.4)
    stream = RandomStream(5)
    for _ in range(200):
        s = sample_session(model, stream)
        assert 2.0 <= s.T < 2.0 + 1e-9
        assert s.a == 1.4


def test_sample_arrival_mean(fig9_model):
    t0, T, a = sample_sessions(fig9_model, RandomStream(11), 1_000_000)
    assert abs(t0.mean() - 19.0) <= 0.013
    assert T.min() >= 1.0 and T.max() < 11.0


def test_sampling_is_reproducible(fig9_model):
    x = sample_sessions(fig9_model, RandomStream(3, 2), 1000)
    y = sample_sessions(fig9_model, RandomStream(3, 2), 1000)
    z = sample_sessions(fig9_model, RandomStream(3, 4), 1000)
    for u, v in zip(x, y):
        np.testing.assert_array_equal(u, v)
    assert not np.array_equal(x[0], z[0])


def _same(p, q):
    np.testing.assert_array_equal(p.sum, q.sum)
    np.testing.assert_array_equal(p.sumsq, q.sumsq)
    assert (p.count, p.energy, p.energy_sq) == (q.count, q.energy, q.energy_sq)


def test_merge_with_empty_is_identity(fig9_model):
    edges = make_grid(0.05)
    p = simulate_block(fig9_model, edges, 1, 0, 500)
    _same(merge_partials([p, PartialHistogram.empty(edges)]), p)
    _same(merge_partials([p]), p)


def test_merge_counts_add(fig9_model):
    edges = make_grid(0.25)
    parts = [simulate_block(fig9_model, edges, 9, j, 25_000) for j in range(4)]
    assert merge_partials(parts).count == 100_000


def test_merge_rejects_grid_mismatch(fig9_model):
    a = PartialHistogram.empty(make_grid(0.05))
    b = PartialHistogram.empty(make_grid(0.1))
    with pytest.raises(GridMismatchError):
        merge_partials([a, b])
    with pytest.raises(ValueError):
        merge_partials([])


def test_merge_matches_concatenated_sessions():
    edges = make_grid(0.5)
    rng = np.random.default_rng(0)
    t0, T = rng.normal(19, 3, 400), rng.uniform(1, 11, 400)
    whole = deposit_sessions(PartialHistogram.empty(edges), t0, T, 1.4)
    halves = [deposit_sessions(PartialHistogram.empty(edges), t0[s], T[s], 1.4)
              for s in (slice(0, 200), slice(200, 400))]
    merged = merge_partials(halves)
    np.testing.assert_allclose(merged.sum, whole.sum, rtol=1e-13)
    assert merged.count == whole.count


def test_worker_count_does_not_change_result(fig9_model):
    serial = simulate(fig9_model, 100_000, 0.05, seed=1, workers=1, block=25_000)
    pooled = simulate(fig9_model, 100_000, 0.05, seed=1, workers=4, block=25_000)
    np.testing.assert_array_equal(serial.values, pooled.values)
    np.testing.assert_array_equal(serial.stderr, pooled.stderr)


def test_simulation_is_deterministic(fig9_model):
    a = simulate(fig9_model, 5_000, 0.1, seed=42)
    b = simulate(fig9_model, 5_000, 0.1, seed=42)
    c = simulate(fig9_model, 5_000, 0.1, seed=43)
    np.testing.assert_array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_single_session_is_one_rectangle(fig9_model):
    p = simulate(fig9_model, 1, 0.05, seed=7)
    nz = p.values[p.values > 0]
    assert np.all(p.stderr == 0)
    # full bins hold exactly a; at most the two end bins are partial
    assert np.sum(np.isclose(nz, 1.4, rtol=0, atol=1e-12)) >= nz.size - 2
    assert np.all(nz <= 1.4 + 1e-12)
    assert daily_energy(p) == pytest.approx(p.meta["energy_mean_kwh"], rel=1e-12)


def test_stderr_halves_when_sessions_quadruple(fig9_model):
    small = simulate(fig9_model, 10_000, 0.5, seed=5)
    large = simulate(fig9_model, 40_000, 0.5, seed=6)
    ratio = np.median(small.stderr / large.stderr)
    assert ratio == pytest.approx(2.0, rel=0.2)


def test_simulation_matches_closed_form(fig9_model):
    # 4 SE per bin: about 6e-5 of bins are expected to miss, so >= 99% is a wide margin
    mc = simulate(fig9_model, 100_000, 0.05, seed=1)
    exact = fold_to_day(fig9_model, 0.05, 2)
    inside = np.abs(mc.values - exact.values) <= 4 * mc.stderr
    assert inside.mean() >= 0.99
    se = mc.meta["energy_stderr_kwh"]
    assert abs(daily_energy(mc) - 8.4) <= 4 * se
    assert se == pytest.approx(1.4 * math.sqrt(100 / 12 / 100_000), rel=0.05)


def test_simulate_argument_checks(fig9_model):
    with pytest.raises(ValueError):
        simulate(fig9_model, 0)
