import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xlwpt.beamform import mrt_weights, path_gain, smc_composite_weights, to_db
from xlwpt.channel import total_channel
from xlwpt.optimize import (
    fit_smc_beam,
    gamma_objective,
    optimize_phases,
    optimize_reflcoeffs,
    per_smc_budget,
    phase_objective,
)

from conftest import crc

STEP2 = np.deg2rad(2.0)


def _disjoint(rng, sizes):
    L = sum(sizes)
    out, start = [], 0
    for n in sizes:
        h = np.zeros(L, dtype=complex)
        h[start:start + n] = crc(rng, n)
        out.append(h)
        start += n
    return out


def test_single_component_needs_no_search(rng):
    h = crc(rng, 8)
    res = optimize_phases(phase_objective(h, [h]), 1)
    np.testing.assert_array_equal(res.params, [0.0])
    assert res.pg == pytest.approx(np.vdot(h, h).real)
    assert res.evaluations == 1


def test_recover_injected_phase(rng):
    a1, a2 = _disjoint(rng, [20, 20])
    h = a1 + a2 * np.exp(-1j * np.deg2rad(118.0))
    phases, pg = optimize_phases(phase_objective(h, [a1, a2]), 2, step=STEP2)
    assert phases[0] == 0.0
    assert abs(np.rad2deg(phases[1]) - 118.0) <= 2.0


def test_recover_injected_phase_generic_channels(rng):
    # random channels on a large array are nearly orthogonal
    a1, a2 = crc(rng, 1000), 0.6 * crc(rng, 1000)
    h = a1 + a2 * np.exp(-1j * np.deg2rad(118.0))
    phases, _ = optimize_phases(phase_objective(h, [a1, a2]), 2, step=STEP2)
    assert abs(np.rad2deg(phases[1]) - 118.0) <= 2.0


def test_random_search_close_to_grid(rng):
    chans = _disjoint(rng, [10, 10, 10])
    h = total_channel([c * np.exp(-1j * p) for c, p in zip(chans, [0.0, 2.0, 4.5])])
    obj = phase_objective(h, chans)
    grid = optimize_phases(obj, 3, step=STEP2)
    rand = optimize_phases(obj, 3, method="random", budget=10_000, seed=4)
    assert rand.evaluations == 10_001
    assert to_db(grid.pg) - to_db(rand.pg) <= 0.2


def test_optimized_beats_baselines(rng):
    chans = _disjoint(rng, [12, 12, 12])
    h = total_channel([c * np.exp(-1j * p) for c, p in zip(chans, [0.0, 1.3, -2.2])])
    obj = phase_objective(h, chans)
    res = optimize_phases(obj, 3, step=np.deg2rad(5))
    assert res.pg >= obj(np.zeros((1, 3)))[0]
    assert res.pg >= max(per_smc_budget(h, chans))


def test_unnormalized_objective_is_raw_superposition(rng):
    chans = [crc(rng, 6), crc(rng, 6)]
    h = crc(rng, 6)
    ph = np.array([[0.0, 0.4]])
    raw = phase_objective(h, chans, normalized=False)(ph)[0]
    w = mrt_weights(chans[0]) + mrt_weights(chans[1]) * np.exp(0.4j)
    assert raw == pytest.approx(abs(h @ w) ** 2)
    norm = phase_objective(h, chans)(ph)[0]
    assert norm == pytest.approx(path_gain(h, smc_composite_weights(chans, ph[0])))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-np.pi, np.pi))
def test_global_phase_of_reference_does_not_move_optimum(seed, alpha):
    rng = np.random.default_rng(seed)
    chans = _disjoint(rng, [5, 5])
    h = chans[0] + chans[1] * np.exp(-0.9j)
    a = optimize_phases(phase_objective(h, chans), 2, step=np.deg2rad(5))
    b = optimize_phases(phase_objective(h * np.exp(1j * alpha), chans), 2, step=np.deg2rad(5))
    np.testing.assert_array_equal(a.params, b.params)


def test_search_is_deterministic(rng):
    chans = [crc(rng, 10) for _ in range(3)]
    h = crc(rng, 10)
    obj = phase_objective(h, chans)
    r1 = optimize_phases(obj, 3, method="random", budget=500, seed=11)
    r2 = optimize_phases(obj, 3, method="random", budget=500, seed=11)
    np.testing.assert_array_equal(r1.params, r2.params)
    assert r1.pg == r2.pg


def test_keep_candidates_and_ties():
    res = optimize_phases(lambda c: np.ones(len(c)), 2, step=np.pi / 2, keep_candidates=True)
    assert res.candidates.shape == (4, 2)
    np.testing.assert_array_equal(res.params, [0.0, 0.0])
    assert len(res.values) == 4


def test_search_argument_errors(rng):
    obj = lambda c: np.zeros(len(c))  # noqa: E731
    with pytest.raises(ValueError):
        optimize_phases(obj, 2, step=0.0)
    with pytest.raises(ValueError):
        optimize_phases(obj, 2, method="random", budget=0)
    with pytest.raises(ValueError):
        optimize_phases(obj, 0)
    with pytest.raises(ValueError):
        optimize_phases(obj, 2, method="anneal")
    with pytest.raises(ValueError):
        optimize_phases(lambda c: np.zeros(3), 2)


def test_gamma_recovery(rng):
    h1, h2 = crc(rng, 50), crc(rng, 50)
    g = 10 ** (-2.28 / 20)
    h_ref = h1 + g * h2
    res = optimize_reflcoeffs(h_ref, [h1, h2])
    assert res.params[0] == 1.0
    assert abs(res.params[1] - g) <= 0.025
    joint = optimize_reflcoeffs(h_ref, [h1, h2], mode="joint")
    assert abs(joint.params[1] - g) <= 0.025


def test_gamma_orthogonal_component_is_zero(rng):
    h1, h2 = _disjoint(rng, [10, 10])
    res = optimize_reflcoeffs(h1, [h1, h2])
    assert res.params[1] == 0.0
    assert res.pg == pytest.approx(np.vdot(h1, h1).real)


def test_gamma_objective_with_phases(rng):
    h1, h2 = crc(rng, 30), crc(rng, 30)
    h_ref = h1 + 0.5 * h2 * np.exp(-0.7j)
    obj = gamma_objective(h_ref, [h1, h2], [0.0, 0.7])
    assert obj([[1.0, 0.5]])[0] == pytest.approx(np.vdot(h_ref, h_ref).real)


def test_gamma_errors(rng):
    h = [crc(rng, 4) for _ in range(4)]
    with pytest.raises(ValueError):
        optimize_reflcoeffs(h[0], h, grid=[])
    with pytest.raises(ValueError):
        optimize_reflcoeffs(h[0], h, grid=[-0.5, 1.0])
    with pytest.raises(ValueError):
        optimize_reflcoeffs(h[0], h, mode="joint")
    with pytest.raises(ValueError):
        optimize_reflcoeffs(h[0], h, mode="spiral")


def test_fit_smc_beam_reaches_mrt_on_exact_model(rng):
    chans = [crc(rng, 40) * s for s in (1.0, 0.6, 0.3)]
    gam = np.array([1.0, 0.75, 0.5])
    h = total_channel([g * c for g, c in zip(gam, chans)])
    beam = fit_smc_beam(chans, h, step=np.deg2rad(5))
    assert to_db(beam.pg) >= to_db(np.vdot(h, h).real) - 0.1
    assert beam.gammas is not None
    plain = fit_smc_beam(chans, h, optimize_phase=False, optimize_gamma=False)
    assert plain.pg <= beam.pg
