import numpy as np
import pytest

from xlwpt.analysis import (
    HIGH,
    LINEAR,
    LOW,
    angle_grid,
    beam_sweep,
    box_grid,
    heatmap,
    planar_grid,
    pw_sweep,
    reciprocity_mc,
    reciprocity_pg_analytic,
    reciprocity_sweep,
    snr_regime,
    sw_sweep,
)
from xlwpt.arrays import ArrayLayout, local_angles, make_ura
from xlwpt.beamform import sw_los_weights
from xlwpt.channel import SPEED_OF_LIGHT, SmcComponent, channel_power, smc_channel

from conftest import crc

LAM = SPEED_OF_LIGHT / 3.8e9


def _unit_power_channel(rng, L):
    return crc(rng, L) / np.sqrt(2) * 1e-3


# --- analytic expectation ------------------------------------------------------

def test_analytic_examples():
    pg, regime = reciprocity_pg_analytic(100, 1e-6, 1e-7)
    assert pg == pytest.approx(10 / 11 * (1e-4 + 1e-7), rel=1e-12)
    assert pg == pytest.approx(9.1009e-5, rel=1e-4)
    assert regime == LINEAR
    assert reciprocity_pg_analytic(64, 2e-6, 0.0) == (64 * 2e-6, HIGH)


def test_analytic_low_snr_limit():
    pg, regime = reciprocity_pg_analytic(100, 1.0, 1e4)
    assert pg == pytest.approx(1e-4 / (1 + 1e-4) * 10_100, rel=1e-12)
    assert pg == pytest.approx(1.0099, rel=1e-4)
    assert regime == LOW


def test_regime_boundaries():
    assert snr_regime(100, 0.01) == LOW
    assert snr_regime(100, 0.0100001) == LINEAR
    assert snr_regime(100, 99.9) == LINEAR
    assert snr_regime(100, 100.0) == HIGH


def test_analytic_errors():
    with pytest.raises(ValueError):
        reciprocity_pg_analytic(0, 1.0, 1.0)
    with pytest.raises(ValueError):
        reciprocity_pg_analytic(10, 0.0, 1.0)
    with pytest.raises(ValueError):
        reciprocity_pg_analytic(10, 1.0, -1.0)


# --- Monte Carlo ------------------------------------------------------------------

def test_mc_noiseless(rng):
    h = crc(rng, 32)
    pt = reciprocity_mc(h, 0.0, 100, seed=1)
    assert pt.pg_mc_mean == pytest.approx(np.vdot(h, h).real)
    assert pt.pg_mc_std == 0.0
    assert pt.regime == HIGH


def test_mc_low_snr_statistics(rng):
    L = 100
    h = _unit_power_channel(rng, L)
    p_ch = channel_power(h)
    var = p_ch * L / 1e-2     # L * SNR = 1e-2
    pt, samples = reciprocity_mc(h, var, 100_000, seed=7, return_samples=True)
    assert pt.regime == LOW
    assert pt.pg_mc_mean == pytest.approx(p_ch, rel=0.03)
    assert pt.pg_mc_std == pytest.approx(p_ch, rel=0.10)
    # exponential path gain: P(|X - mu| <= n mu) = 1 - exp(-(n + 1))
    for got, want in zip(pt.coverage, (0.864, 0.950, 0.982)):
        assert abs(got - want) <= 0.01
    assert 3.5 <= (pt.pg_mc_mean + 3 * pt.pg_mc_std) / p_ch <= 4.5
    assert samples.shape == (100_000,)


def test_mc_high_snr_asymptote(rng):
    L = 100
    h = _unit_power_channel(rng, L)
    p_ch = channel_power(h)
    pt = reciprocity_mc(h, p_ch / (100 * L), 10_000, seed=2)
    assert pt.pg_mc_mean == pytest.approx(L * p_ch, rel=0.01)


@pytest.mark.parametrize("L", [10, 100, 1000])
def test_mc_matches_analytic(L):
    rng = np.random.default_rng(1000 + L)
    h = _unit_power_channel(rng, L)
    pts = reciprocity_sweep(h, np.arange(-40, 41, 5), 10_000, seed=3)
    err = np.array([abs(p.pg_mc_mean - p.pg_analytic) / p.pg_analytic for p in pts])
    assert err.max() <= 0.03, f"worst relative error {err.max():.4f}"


def test_mc_worker_count_is_irrelevant(rng):
    h = crc(rng, 50)
    a = reciprocity_mc(h, 3.0, 3000, seed=5, workers=1, return_samples=True)[1]
    b = reciprocity_mc(h, 3.0, 3000, seed=5, workers=4, return_samples=True)[1]
    np.testing.assert_array_equal(a, b)


def test_mc_rejects_zero_realizations(rng):
    with pytest.raises(ValueError):
        reciprocity_mc(crc(rng, 4), 1.0, 0)


# --- sweeps -------------------------------------------------------------------------

def _los_setup(rx):
    lay = make_ura(16, 16, LAM / 2, LAM / 2, [0, 0, 0], [1, 0, 0])
    return lay, smc_channel(SmcComponent(1, lay), rx, LAM)


def test_pw_sweep_finds_direction():
    rx = np.array([200.0, 80.0, -50.0])
    lay, h = _los_setup(rx)
    th, ph = local_angles(lay, "center", rx)
    thetas = np.deg2rad(np.arange(60, 121, 1.0))
    phis = np.deg2rad(np.arange(-10, 41, 1.0))
    res = pw_sweep(h, lay, LAM, thetas, phis)
    assert abs(res.best[0] - th) <= np.deg2rad(1.0)
    assert abs(res.best[1] - ph) <= np.deg2rad(1.0)


def test_single_candidate_sweep(rng):
    h = crc(rng, 4)
    res = beam_sweep(h, lambda b: np.ones((len(b), 4)) / 2, [[0.3, 0.1]])
    assert res.index == 0
    np.testing.assert_array_equal(res.best, [0.3, 0.1])
    with pytest.raises(ValueError):
        beam_sweep(h, lambda b: b, np.empty((0, 2)))


def test_sweep_argmax_global_scalar_invariance():
    rx = np.array([50.0, -20.0, 10.0])
    lay, h = _los_setup(rx)
    thetas = np.deg2rad(np.arange(70, 111, 2.0))
    phis = np.deg2rad(np.arange(-40, 1, 2.0))
    a = pw_sweep(h, lay, LAM, thetas, phis)
    b = pw_sweep(h * (3e4 * np.exp(1.7j)), lay, LAM, thetas, phis)
    assert a.index == b.index


def test_sw_sweep_finds_device():
    rx = np.array([1.5, 0.2, -0.1])
    lay, h = _los_setup(rx)
    # phases align exactly only at the device, so it wins whenever it is on the grid
    grid = box_grid(rx, 0.25, LAM / 2)
    res = sw_sweep(h, lay, LAM, grid)
    np.testing.assert_allclose(res.best, rx, atol=1e-12)


def test_grid_builders():
    g = angle_grid([0.1, 0.2], [1.0, 2.0, 3.0])
    assert g.shape == (6, 2)
    np.testing.assert_array_equal(g[:3, 0], 0.1)
    c = np.array([1.0, 2.0, 3.0])
    box = box_grid(c, 0.5, 0.1)
    assert len(box) == 11 ** 3
    assert np.any(np.all(box == c, axis=1))
    pl = planar_grid(c, 8, 8, 0.375 * LAM)
    assert pl.shape == (64, 3)
    np.testing.assert_allclose(pl.mean(axis=0), c, atol=1e-12)
    assert np.ptp(pl[:, 0]) == pytest.approx(7 * 0.375 * LAM)


# --- heatmaps ----------------------------------------------------------------------

def test_heatmap_peaks_at_focus():
    # large aperture close to the focus keeps the depth of field short
    lay = make_ura(40, 25, 0.7275 * LAM, 0.7275 * LAM, [3, 0, 1.5], [-1, 0, 0])
    focus = np.array([2.0, 0.3, 1.2])
    comp = SmcComponent(1, lay)
    w = sw_los_weights(lay, focus, LAM)
    pts = planar_grid(focus, 9, 9, 0.375 * LAM)
    field = heatmap(w, pts, lambda p: smc_channel(comp, p, LAM))
    assert np.allclose(pts[int(np.argmax(field))], focus, atol=0.375 * LAM + 1e-9)


def test_heatmap_single_element_friis():
    comp = SmcComponent(1, ArrayLayout([[0.0, 0, 0]]))
    pts = np.array([[1.0, 0, 0], [2.0, 0, 0], [4.0, 0, 0]])
    field = heatmap(np.array([1.0]), pts, lambda p: smc_channel(comp, p, LAM))
    np.testing.assert_allclose(field, (LAM / (4 * np.pi * pts[:, 0])) ** 2, rtol=1e-12)


def test_heatmap_hallway_is_deterministic(hallway):
    rx = hallway.device(1)
    h = hallway.channel(rx)
    w = np.conj(h) / np.linalg.norm(h)
    pts = planar_grid(rx, 8, 8, 0.375 * hallway.wavelength)
    a = heatmap(w, pts, hallway.channel)
    b = heatmap(w, pts, hallway.channel)
    np.testing.assert_array_equal(a, b)
    assert len(a) == 64
    with pytest.raises(ValueError):
        heatmap(w, np.empty((0, 3)), hallway.channel)
