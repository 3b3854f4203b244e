"""Search procedures for multibeam phases and reflection coefficients.

Phase searches treat the objective as a black box: a callable mapping an
``(N, K)`` array of candidate phase vectors to ``N`` path gains. That covers
both model-based evaluation and power feedback from a woken-up device.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .beamform import mrt_weights, path_gain, smc_composite_weights, smc_model_weights

__all__ = [
    "SearchResult",
    "per_smc_budget",
    "phase_objective",
    "optimize_phases",
    "gamma_objective",
    "optimize_reflcoeffs",
    "SmcBeam",
    "fit_smc_beam",
]

_CHUNK = 65536


@dataclass
class SearchResult:
    params: np.ndarray
    pg: float
    evaluations: int = 0
    candidates: Optional[np.ndarray] = field(default=None, repr=False)
    values: Optional[np.ndarray] = field(default=None, repr=False)

    def __iter__(self):
        # allows ``phases, pg = optimize_phases(...)``
        yield self.params
        yield self.pg


def per_smc_budget(h_ref, per_smc_channels: Sequence) -> List[float]:
    """Path gain on ``h_ref`` of an MRT beam matched to each single component."""
    h_ref = np.asarray(h_ref)
    out = []
    for hk in per_smc_channels:
        hk = np.asarray(hk)
        if hk.shape != h_ref.shape:
            raise ValueError("component and reference channel lengths differ")
        out.append(float(abs(h_ref @ mrt_weights(hk)) ** 2))
    return out


def phase_objective(h, per_smc_channels: Sequence, normalized: bool = True
                    ) -> Callable[[np.ndarray], np.ndarray]:
    """Batched ``|sum_k h^T w_k exp(j phi_k)|^2 / ||sum_k w_k exp(j phi_k)||^2``.

    The denominator makes this the path gain of the normalized composite
    weights, so non-orthogonal beams are scored correctly. ``normalized=False``
    drops it and scores the raw beam superposition.
    """
    h = np.asarray(h, dtype=complex)
    Wk = np.array([mrt_weights(hk) for hk in per_smc_channels])  # (K, L)
    proj = Wk @ h                       # h^T w_k
    gram = Wk.conj() @ Wk.T             # <w_i, w_k>

    def objective(phases):
        z = np.exp(1j * np.atleast_2d(phases))
        num = np.abs(z @ proj) ** 2
        if not normalized:
            return num
        den = np.einsum("ni,ik,nk->n", z.conj(), gram, z).real
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(den > 1e-300, num / den, 0.0)

    return objective


def _check_objective_output(values, n):
    values = np.asarray(values, dtype=float).ravel()
    if values.shape != (n,):
        raise ValueError("objective must return one value per candidate")
    return values


def optimize_phases(
    objective: Callable[[np.ndarray], np.ndarray],
    K: int,
    method: str = "grid",
    step: float = np.deg2rad(5.0),
    budget: int = 10_000,
    seed=None,
    keep_candidates: bool = False,
) -> SearchResult:
    """Search beam phases with the first one pinned to zero.

    ``method="grid"`` scans ``phi_2 .. phi_K`` over ``[0, 2 pi)`` with spacing
    ``step`` (radians) in lexicographic order; ``method="random"`` draws
    ``budget`` uniform candidates after the all-zero one. Ties resolve to the
    first candidate in scan order.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if method == "grid":
        if not step > 0:
            raise ValueError("grid step must be positive")
        axis = np.arange(0.0, 2 * np.pi - 1e-12, step)
        n_total = len(axis) ** (K - 1)
        chunks = _grid_chunks(axis, K)
    elif method == "random":
        if int(budget) < 1:
            raise ValueError("random-search budget must be positive")
        rng = np.random.default_rng(seed)
        draws = np.zeros((int(budget) + 1, K))
        draws[1:, 1:] = rng.uniform(0.0, 2 * np.pi, size=(int(budget), K - 1))
        n_total = len(draws)
        chunks = (draws[i:i + _CHUNK] for i in range(0, n_total, _CHUNK))
    else:
        raise ValueError(f"unknown search method {method!r}")

    best_val, best = -np.inf, None
    all_c, all_v = [], []
    for cand in chunks:
        vals = _check_objective_output(objective(cand), len(cand))
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, best = float(vals[i]), cand[i].copy()
        if keep_candidates:
            all_c.append(cand)
            all_v.append(vals)
    return SearchResult(
        best, best_val, n_total,
        np.concatenate(all_c) if keep_candidates else None,
        np.concatenate(all_v) if keep_candidates else None,
    )


def _grid_chunks(axis, K):
    if K == 1:
        yield np.zeros((1, 1))
        return
    n = len(axis)
    total = n ** (K - 1)
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total))
        cols = np.unravel_index(idx, (n,) * (K - 1))
        cand = np.zeros((len(idx), K))
        for j, c in enumerate(cols, start=1):
            cand[:, j] = axis[c]
        yield cand


def gamma_objective(h_ref, per_smc_channels: Sequence, phases=None):
    """Batched ``|h_model^H h_ref|^2 / ||h_model||^2`` over reflection coefficients.

    ``h_model = sum_k gamma_k h_k exp(-j phi_k)``; each ``h_k`` is the
    component channel evaluated with unit reflection coefficient.
    """
    H = np.array([np.asarray(hk, dtype=complex) for hk in per_smc_channels])
    K = len(H)
    phases = np.zeros(K) if phases is None else np.asarray(phases, dtype=float)
    H = H * np.exp(-1j * phases)[:, None]
    proj = H.conj() @ np.asarray(h_ref, dtype=complex)   # h_k^H h_ref
    gram = H.conj() @ H.T                                # h_i^H h_k

    def objective(gammas):
        g = np.atleast_2d(np.asarray(gammas, dtype=float))
        num = np.abs(g @ proj) ** 2
        den = np.einsum("ni,ik,nk->n", g, gram, g).real
        with np.errstate(invalid="ignore", divide="ignore"):
            out = num / den
        return np.where(den > 0, out, 0.0)

    return objective


def optimize_reflcoeffs(
    h_ref,
    per_smc_channels: Sequence,
    phases=None,
    grid: Optional[Sequence[float]] = None,
    mode: str = "coordinate",
    initial=None,
) -> SearchResult:
    """Grid search of reflection coefficients ``gamma_2 .. gamma_K`` (``gamma_1 = 1``).

    ``mode="coordinate"`` runs a single pass over the components, optimizing
    one coefficient at a time with the others held at their current value
    (``initial``, ones by default). ``mode="joint"`` scans the full product
    grid and is restricted to K <= 3.
    """
    grid = np.linspace(0.0, 1.0, 41) if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty reflection-coefficient grid")
    if np.any(grid < 0):
        raise ValueError("reflection coefficients must be >= 0")
    K = len(per_smc_channels)
    obj = gamma_objective(h_ref, per_smc_channels, phases)
    gam = np.ones(K) if initial is None else np.array(initial, dtype=float)
    gam[0] = 1.0
    if K == 1:
        return SearchResult(gam, float(obj(gam)[0]), 1)
    if mode == "coordinate":
        n_eval = 0
        for k in range(1, K):
            cand = np.repeat(gam[None, :], len(grid), axis=0)
            cand[:, k] = grid
            vals = obj(cand)
            n_eval += len(grid)
            gam[k] = grid[int(np.argmax(vals))]
        return SearchResult(gam, float(obj(gam)[0]), n_eval)
    if mode == "joint":
        if K > 3:
            raise ValueError("joint reflection-coefficient grid limited to K <= 3")
        combos = np.array(list(itertools.product(grid, repeat=K - 1)))
        cand = np.hstack([np.ones((len(combos), 1)), combos])
        vals = obj(cand)
        i = int(np.argmax(vals))
        return SearchResult(cand[i], float(vals[i]), len(cand))
    raise ValueError(f"unknown mode {mode!r}")


@dataclass
class SmcBeam:
    weights: np.ndarray
    phases: np.ndarray
    gammas: Optional[np.ndarray]
    pg: float


def fit_smc_beam(
    component_channels: Sequence,
    h_feedback,
    optimize_phase: bool = True,
    optimize_gamma: bool = True,
    method: str = "grid",
    step: float = np.deg2rad(5.0),
    budget: int = 10_000,
    seed=None,
    gamma_grid=None,
    initial_gammas=None,
) -> SmcBeam:
    """Multibeam weights from modeled component channels, tuned on feedback.

    ``h_feedback`` stands in for the device power report: candidate weights
    are scored by their path gain on it. Phases are searched on the
    per-beam superposition; reflection coefficients are then fitted with
    those phases and the final weights are MRT on the reweighted model sum.
    Without either search the result is MRT on the plain model sum.
    """
    K = len(component_channels)
    phases = np.zeros(K)
    if optimize_phase:
        res = optimize_phases(phase_objective(h_feedback, component_channels), K,
                              method=method, step=step, budget=budget, seed=seed)
        phases = res.params
    gammas = None
    if optimize_gamma:
        gammas = optimize_reflcoeffs(h_feedback, component_channels, phases, gamma_grid,
                                     initial=initial_gammas).params
        w = smc_model_weights(component_channels, phases, gammas)
    elif optimize_phase:
        w = smc_composite_weights(component_channels, phases)
    else:
        w = smc_model_weights(component_channels)
    return SmcBeam(w, phases, gammas, path_gain(h_feedback, w))
