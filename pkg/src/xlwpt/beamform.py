"""Beamforming weights and path gain.

The received phasor is ``y = h^T w sqrt(P_t) + n`` (plain transpose), so the
power-optimal weights are ``w = conj(h) / ||h||``.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .arrays import ArrayLayout

__all__ = [
    "path_gain",
    "path_gains",
    "receive_phasor",
    "normalize",
    "mrt_weights",
    "wave_vector",
    "pw_weights",
    "pw_weight_matrix",
    "sw_los_weights",
    "sw_weight_matrix",
    "composite_vector",
    "smc_composite_weights",
    "smc_model_weights",
    "to_db",
    "from_db",
]


def to_db(x):
    """Power ratio in dB."""
    with np.errstate(divide="ignore"):
        return 10 * np.log10(x)


def from_db(x_db):
    return 10 ** (np.asarray(x_db, dtype=float) / 10)


def normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("cannot normalize a zero vector")
    return v / n


def path_gain(h, w) -> float:
    """``|h^T w|^2``."""
    h = np.asarray(h)
    w = np.asarray(w)
    if h.shape != w.shape:
        raise ValueError(f"dimension mismatch: h{h.shape} vs w{w.shape}")
    return float(abs(np.dot(h, w)) ** 2)


def path_gains(h, W) -> np.ndarray:
    """Path gain of ``h`` for every row of the weight matrix ``W``."""
    h = np.asarray(h)
    W = np.asarray(W)
    if W.shape[-1] != h.shape[0]:
        raise ValueError("dimension mismatch between weights and channel")
    return np.abs(W @ h) ** 2


def receive_phasor(h, w, tx_power: float, noise: complex = 0.0) -> complex:
    if tx_power < 0:
        raise ValueError("transmit power must be >= 0")
    return complex(np.dot(h, w) * np.sqrt(tx_power) + noise)


def mrt_weights(h) -> np.ndarray:
    """Maximum ratio transmission weights ``conj(h) / ||h||``."""
    return normalize(np.conj(np.asarray(h, dtype=complex)))


def wave_vector(theta, phi, wavelength: float, orientation=None) -> np.ndarray:
    """Global-frame wave vector(s) for local look angles.

    ``orientation`` maps global to local directions; the local direction is
    rotated back with its transpose.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    k0 = 2 * np.pi / wavelength
    local = np.stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi),
                      np.cos(theta)], axis=-1)
    R = np.eye(3) if orientation is None else np.asarray(orientation, dtype=float)
    return k0 * local @ R


def pw_weight_matrix(positions, kvecs) -> np.ndarray:
    """Rows are centered planar-wavefront weights for each wave vector."""
    kvecs = np.atleast_2d(kvecs)
    L = len(positions)
    return np.exp(-1j * (kvecs @ np.asarray(positions).T)) / np.sqrt(L)


def pw_weights(
    layout: ArrayLayout,
    theta: float,
    phi: float,
    wavelength: float,
    variant: str = "centered",
    target_range: float = 1.0,
) -> np.ndarray:
    """Planar-wavefront weights steering towards local direction ``(theta, phi)``.

    ``variant="centered"`` models the steering vector as
    ``exp(j p_l^T k)``. ``variant="offset"`` models it relative to the target
    point ``p = center + target_range * k / k0`` as ``exp(-j (p - p_l)^T k)``,
    which differs only by a common phase.
    """
    k = wave_vector(theta, phi, wavelength, layout.orientation)
    if variant == "centered":
        h_model = np.exp(1j * (layout.positions @ k))
    elif variant == "offset":
        k0 = 2 * np.pi / wavelength
        target = layout.center + target_range * k / k0
        h_model = np.exp(-1j * ((target - layout.positions) @ k))
    else:
        raise ValueError(f"unknown PW variant {variant!r}")
    return mrt_weights(h_model)


def sw_weight_matrix(positions, targets, wavelength: float) -> np.ndarray:
    """Rows are spherical-wavefront (focusing) weights for each target point."""
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    positions = np.asarray(positions, dtype=float)
    d = np.linalg.norm(targets[:, None, :] - positions[None, :, :], axis=-1)
    if np.any(d == 0):
        raise ValueError("focus point coincides with an array element")
    return np.exp(1j * (2 * np.pi / wavelength) * d) / np.sqrt(positions.shape[0])


def sw_los_weights(layout: ArrayLayout, device_pos, wavelength: float) -> np.ndarray:
    """Phase-only weights focusing a spherical wavefront on ``device_pos``."""
    return sw_weight_matrix(layout.positions, device_pos, wavelength)[0]


def composite_vector(per_smc_channels: Sequence, phases, amp_scales=None) -> np.ndarray:
    """Unnormalized ``sum_k a_k conj(h_k)/||h_k|| exp(j phi_k)``."""
    chans = [np.asarray(h, dtype=complex) for h in per_smc_channels]
    if not chans:
        raise ValueError("need at least one component channel")
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (len(chans),):
        raise ValueError("one phase per component required")
    amps = np.ones(len(chans)) if amp_scales is None else np.asarray(amp_scales, dtype=float)
    acc = np.zeros_like(chans[0])
    for h, a, ph in zip(chans, amps, phases):
        acc += a * mrt_weights(h) * np.exp(1j * ph)
    return acc


def smc_composite_weights(per_smc_channels: Sequence, phases=None, amp_scales=None) -> np.ndarray:
    """Superposition of per-component MRT beams with relative phases.

    Parameters
    ----------
    per_smc_channels : sequence of complex arrays
        Modeled channel of each component (line of sight first).
    phases : array_like, optional
        Beam phase per component in radians, zeros by default.
    amp_scales : array_like, optional
        Amplitude weight per beam (reflection-coefficient or per-device
        weighting); ones by default.
    """
    if phases is None:
        phases = np.zeros(len(per_smc_channels))
    acc = composite_vector(per_smc_channels, phases, amp_scales)
    scale = len(per_smc_channels) if amp_scales is None else np.sum(np.abs(amp_scales))
    if np.linalg.norm(acc) <= 1e-12 * scale:
        raise ValueError("component beams cancel out")
    return normalize(acc)


def smc_model_weights(per_smc_channels: Sequence, phases=None, gammas=None) -> np.ndarray:
    """MRT on the summed model channel ``sum_k gamma_k h_k exp(-j phi_k)``.

    With zero phases and unit gammas this is MRT on the plain sum of the
    component channels. The phase sign matches :func:`smc_composite_weights`,
    whose beams carry ``exp(+j phi_k)`` on the conjugated channel.
    """
    K = len(per_smc_channels)
    phases = np.zeros(K) if phases is None else np.asarray(phases, dtype=float)
    gammas = np.ones(K) if gammas is None else np.asarray(gammas, dtype=float)
    h = sum(g * np.asarray(hk, dtype=complex) * np.exp(-1j * ph)
            for hk, g, ph in zip(per_smc_channels, gammas, phases))
    return mrt_weights(h)
