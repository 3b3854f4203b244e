"""Reciprocity-beamformer efficiency, beam sweeps and path-gain fields."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from .beamform import path_gains, pw_weight_matrix, sw_weight_matrix, wave_vector
from .channel import channel_power, complex_gaussian

__all__ = [
    "LOW",
    "LINEAR",
    "HIGH",
    "snr_regime",
    "reciprocity_pg_analytic",
    "ReciprocityPoint",
    "reciprocity_mc",
    "reciprocity_sweep",
    "SweepResult",
    "beam_sweep",
    "pw_sweep",
    "sw_sweep",
    "angle_grid",
    "box_grid",
    "planar_grid",
    "heatmap",
]

LOW, LINEAR, HIGH = "low", "linear", "high"

# Realizations per RNG stream. Fixed so results do not depend on the worker count.
MC_BLOCK = 512


def snr_regime(L: int, snr: float) -> str:
    if snr >= L:
        return HIGH
    if L * snr <= 1:
        return LOW
    return LINEAR


def reciprocity_pg_analytic(L: int, p_ch: float, p_n: float):
    """Expected path gain of MRT on a noisy channel estimate.

    Returns ``(pg, regime)`` with ``pg = SNR / (1 + SNR) * (L p_ch + p_n)``
    and ``SNR = p_ch / p_n``.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    if not p_ch > 0:
        raise ValueError("channel power must be positive")
    if p_n < 0:
        raise ValueError("noise power must be >= 0")
    if p_n == 0:
        return L * p_ch, HIGH
    snr = p_ch / p_n
    return snr / (1 + snr) * (L * p_ch + p_n), snr_regime(L, snr)


@dataclass
class ReciprocityPoint:
    snr: float
    l_snr: float
    p_ch: float
    pg_analytic: float
    pg_mc_mean: float
    pg_mc_std: float
    coverage: tuple
    regime: str
    realizations: int


def _mc_block(h, variance, seed, stream, block, n):
    rng = np.random.default_rng([seed, stream, block])
    est = h[None, :] + complex_gaussian(rng, (n, h.size), variance)
    # PG of w = conj(est)/||est|| on h, i.e. |est^H h|^2 / ||est||^2
    num = np.abs(est.conj() @ h) ** 2
    den = np.einsum("ij,ij->i", est.real, est.real) + np.einsum("ij,ij->i", est.imag, est.imag)
    return num / den


def reciprocity_mc(
    h,
    variance: float,
    realizations: int,
    seed: int = 0,
    stream: int = 0,
    workers: int = 1,
    return_samples: bool = False,
):
    """Monte Carlo path gain of reciprocity-based MRT with noisy CSI.

    Noise realizations come in blocks of ``MC_BLOCK``; block ``b`` uses the
    generator seeded by ``(seed, stream, b)``, so serial and threaded runs
    agree bit for bit.

    Returns
    -------
    ReciprocityPoint, plus the per-realization path gains when
    ``return_samples`` is set.
    """
    h = np.asarray(h, dtype=complex)
    M = int(realizations)
    if M < 1:
        raise ValueError("need at least one realization")
    L = h.size
    p_ch = channel_power(h)
    sizes = [min(MC_BLOCK, M - s) for s in range(0, M, MC_BLOCK)]
    if variance == 0:
        pg = np.full(M, float(np.vdot(h, h).real))
    else:
        jobs = [(h, variance, seed, stream, b, n) for b, n in enumerate(sizes)]
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as ex:
                parts = list(ex.map(lambda a: _mc_block(*a), jobs))
        else:
            parts = [_mc_block(*a) for a in jobs]
        pg = np.concatenate(parts)
    mean = float(pg.mean())
    std = float(pg.std(ddof=1)) if M > 1 else 0.0
    if variance > 0:
        pg_r, regime = reciprocity_pg_analytic(L, p_ch, variance)
        snr = p_ch / variance
    else:
        pg_r, regime, snr = L * p_ch, HIGH, np.inf
    cov = tuple(float(np.mean(np.abs(pg - pg_r) <= n * std)) for n in (1, 2, 3))
    point = ReciprocityPoint(snr, L * snr, p_ch, pg_r, mean, std, cov, regime, M)
    return (point, pg) if return_samples else point


def reciprocity_sweep(h, snr_db: Sequence[float], realizations: int, seed: int = 0,
                      workers: int = 1) -> List[ReciprocityPoint]:
    """:func:`reciprocity_mc` over a channel-SNR grid (one RNG stream per grid point)."""
    p_ch = channel_power(h)
    if not p_ch > 0:
        raise ValueError("channel power must be positive")
    return [reciprocity_mc(h, p_ch / 10 ** (s / 10), realizations, seed, i, workers)
            for i, s in enumerate(snr_db)]


@dataclass
class SweepResult:
    grid: np.ndarray
    pg: np.ndarray
    index: int

    @property
    def best(self) -> np.ndarray:
        return self.grid[self.index]

    @property
    def pg_max(self) -> float:
        return float(self.pg[self.index])


def beam_sweep(h_eval, weight_fn: Callable[[np.ndarray], np.ndarray], grid, chunk: int = 2048) -> SweepResult:
    """Exhaustive evaluation of candidate beams against ``h_eval``.

    ``weight_fn`` maps a block of grid rows to a matrix of unit-norm weights
    (one row per candidate). The argmax is the first maximum in grid order.
    """
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    if len(grid) == 0:
        raise ValueError("empty sweep grid")
    pg = np.concatenate([path_gains(h_eval, weight_fn(grid[i:i + chunk]))
                         for i in range(0, len(grid), chunk)])
    return SweepResult(grid, pg, int(np.argmax(pg)))


def angle_grid(thetas, phis) -> np.ndarray:
    """``(theta, phi)`` rows, theta-major."""
    t, p = np.meshgrid(np.asarray(thetas, float), np.asarray(phis, float), indexing="ij")
    return np.column_stack([t.ravel(), p.ravel()])


def box_grid(center, half_width: float, step: float) -> np.ndarray:
    """Cubic lattice of points with spacing ``step`` that contains ``center``."""
    n = int(np.floor(half_width / step + 1e-9))
    offs = np.arange(-n, n + 1) * step
    gx, gy, gz = np.meshgrid(offs, offs, offs, indexing="ij")
    return np.asarray(center, float) + np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])


def planar_grid(center, nx: int, ny: int, spacing: float) -> np.ndarray:
    """``nx x ny`` points parallel to the xy-plane centered on ``center`` (x-major)."""
    ox = (np.arange(nx) - (nx - 1) / 2) * spacing
    oy = (np.arange(ny) - (ny - 1) / 2) * spacing
    gx, gy = np.meshgrid(ox, oy, indexing="ij")
    c = np.asarray(center, float)
    return np.column_stack([c[0] + gx.ravel(), c[1] + gy.ravel(), np.full(gx.size, c[2])])


def pw_sweep(h_eval, layout, wavelength: float, thetas, phis) -> SweepResult:
    """Planar-wavefront sweep over local look angles of ``layout``."""
    def weights(block):
        k = wave_vector(block[:, 0], block[:, 1], wavelength, layout.orientation)
        return pw_weight_matrix(layout.positions, k)
    return beam_sweep(h_eval, weights, angle_grid(thetas, phis))


def sw_sweep(h_eval, layout, wavelength: float, points) -> SweepResult:
    """Spherical-wavefront (focusing) sweep over candidate 3D positions."""
    return beam_sweep(h_eval, lambda b: sw_weight_matrix(layout.positions, b, wavelength), points)


def heatmap(w, receivers, channel_fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Path gain of fixed weights ``w`` at each receiver point.

    ``channel_fn`` synthesizes the channel vector at a point, e.g.
    ``scenario.channel``.
    """
    receivers = np.atleast_2d(np.asarray(receivers, dtype=float))
    if len(receivers) == 0:
        raise ValueError("empty receiver grid")
    w = np.asarray(w)
    return np.array([abs(np.dot(channel_fn(p), w)) ** 2 for p in receivers])
