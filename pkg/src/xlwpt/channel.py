"""Geometry-based channel synthesis with specular multipath components.

Channel vectors are plain complex numpy arrays of length L (one transmission
coefficient per array element).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .arrays import ISOTROPIC, ArrayLayout, GainPattern, direction_angles
from .geometry import Wall, mirror_array, visibility_vector

__all__ = [
    "SPEED_OF_LIGHT",
    "SmcComponent",
    "build_components",
    "smc_channel",
    "total_channel",
    "channel_power",
    "complex_gaussian",
    "noisy_estimate",
]

SPEED_OF_LIGHT = 299_792_458.0


@dataclass
class SmcComponent:
    """One specular component: the line of sight (k=1) or a first-order image."""

    index: int
    layout: ArrayLayout
    refl_coeff: float = 1.0
    generating_wall: Optional[Wall] = None
    visibility: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.refl_coeff < 0:
            raise ValueError("reflection coefficient must be >= 0")
        if self.index == 1 and (self.generating_wall is not None or self.refl_coeff != 1.0):
            raise ValueError("component 1 is the line of sight: no wall, unit reflection")
        if self.visibility is None:
            self.visibility = np.ones(self.layout.num_elements, dtype=np.int8)
        self.visibility = np.asarray(self.visibility)
        if self.visibility.shape != (self.layout.num_elements,):
            raise ValueError("visibility length must match the number of elements")
        if not np.isin(self.visibility, (0, 1)).all():
            raise ValueError("visibility entries must be 0 or 1")

    @property
    def is_los(self) -> bool:
        return self.generating_wall is None


def build_components(
    layout: ArrayLayout,
    device_pos,
    walls: Sequence[Wall],
    reflectors: Optional[Sequence[Wall]] = None,
    occlusion_enabled: bool = False,
) -> List[SmcComponent]:
    """Line of sight plus one first-order image per reflecting wall, with visibility.

    ``reflectors`` defaults to all ``walls``; ``walls`` is the full set used
    for occlusion tests.
    """
    reflectors = list(walls) if reflectors is None else list(reflectors)
    comps = [SmcComponent(1, layout, 1.0, None,
                          visibility_vector(layout, device_pos, None, walls))]
    for k, wall in enumerate(reflectors, start=2):
        image = mirror_array(layout, wall)
        vis = visibility_vector(image, device_pos, wall, walls, occlusion_enabled)
        comps.append(SmcComponent(k, image, wall.reflection_coeff, wall, vis))
    return comps


def smc_channel(
    component: SmcComponent,
    device_pos,
    wavelength: float,
    tx_pattern: GainPattern = ISOTROPIC,
    device_pattern: GainPattern = ISOTROPIC,
    device_orientation=None,
    device_polarization=(0.0, 0.0, 1.0),
) -> np.ndarray:
    """Channel vector of one component at ``device_pos``.

    Each entry is the product of visibility, transmit and receive amplitude
    gains, free-space loss ``lambda / (4 pi d)``, reflection coefficient,
    polarization factor and the propagation phase ``exp(-j k0 d)``, with
    ``d`` the distance from the (image) element to the device.
    """
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    p = np.asarray(device_pos, dtype=float)
    lay = component.layout
    diff = p - lay.positions
    d = np.linalg.norm(diff, axis=1)
    if np.any(d == 0):
        raise ValueError("device position coincides with an array element")
    amp = wavelength / (4 * np.pi * d) * component.refl_coeff
    if tx_pattern.kind != "isotropic":
        th, ph = direction_angles(diff @ lay.orientation.T)
        amp = amp * np.sqrt(tx_pattern(th, ph))
    if device_pattern.kind != "isotropic":
        R = np.eye(3) if device_orientation is None else np.asarray(device_orientation, float)
        th, ph = direction_angles(-diff @ R.T)
        amp = amp * np.sqrt(device_pattern(th, ph))
    rho_r = np.asarray(device_polarization, dtype=float)
    amp = amp * abs(float(lay.polarization @ rho_r))
    k0 = 2 * np.pi / wavelength
    return component.visibility * amp * np.exp(-1j * k0 * d)


def complex_gaussian(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    """Circular complex Gaussian samples, ``variance`` split equally over I and Q."""
    s = np.sqrt(variance / 2.0)
    return s * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def total_channel(
    component_channels: Sequence[np.ndarray],
    dm_variance: Optional[float] = None,
    seed=None,
) -> np.ndarray:
    """Sum of component channels plus optional white diffuse multipath."""
    if len(component_channels) < 1:
        raise ValueError("need at least one component")
    h = np.sum(np.asarray(component_channels, dtype=complex), axis=0)
    if dm_variance:
        h = h + complex_gaussian(np.random.default_rng(seed), h.shape, dm_variance)
    return h


def channel_power(h) -> float:
    """Average per-element channel power ``||h||^2 / L``."""
    h = np.asarray(h)
    return float(np.vdot(h, h).real / h.size)


def noisy_estimate(h, variance: float, seed=None) -> np.ndarray:
    """Channel estimate ``h + n`` with i.i.d. CN(0, ``variance``) noise."""
    if variance < 0:
        raise ValueError("noise variance must be >= 0")
    h = np.asarray(h, dtype=complex)
    if variance == 0:
        return h.copy()
    return h + complex_gaussian(np.random.default_rng(seed), h.shape, variance)
