"""Beamforming weight strategies, the normalized combining gain, and
far-field beampatterns.

All radios transmit at maximum power, so weight magnitudes are fixed to one
and only the phases differ between strategies.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .channel import CarrierConfig, ChannelRealization, los_phase_cycles
from .geometry import Placement


class IncompleteFeedbackError(ValueError):
    """Raised when guide feedback does not cover every follower."""


class FarFieldWarning(UserWarning):
    """Pattern probe radius is below the far-field threshold."""


@dataclass(frozen=True)
class WeightVector:
    """Per-radio unit-magnitude complex weights, stored as phases."""

    phases: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "phases", np.asarray(self.phases, dtype=float))

    @property
    def n_radios(self) -> int:
        return len(self.phases)

    def weights(self) -> np.ndarray:
        return np.exp(1j * self.phases)


@dataclass(frozen=True)
class GuideModel:
    """Phase behavior of the guide's transmit chain.

    A reciprocal guide transmits with zero phase offset; a non-reciprocal
    one has an unknown offset between its receive and transmit chains,
    modeled as uniform random per trial.
    """

    reciprocal: bool = True

    def guide_phase(self, rng) -> float:
        if self.reciprocal:
            return 0.0
        rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
        return float(rng.uniform(0.0, 2.0 * math.pi))


@dataclass(frozen=True)
class Beampattern:
    """Combining gain versus far-field angle around the radio cluster."""

    angles_rad: np.ndarray
    gains: np.ndarray
    radius_m: float


def gain(weights: WeightVector, channels: ChannelRealization) -> float:
    """Normalized combining gain: |sum w_i h_i| / sum |w_i||h_i|, in [0, 1].

    Equals 1 exactly when all combining phases agree, and degrades toward
    the random-phase floor sqrt(pi / 4N) as they decohere.
    """
    if weights.n_radios == 0 or channels.n_radios == 0:
        raise ValueError("gain of an empty array is undefined")
    if weights.n_radios != channels.n_radios:
        raise ValueError("weights and channels must cover the same radios")
    num = np.abs(np.sum(weights.weights() * channels.h))
    den = np.sum(np.abs(channels.h))
    return float(num / den)


def guide_feedback_phases(placement: Placement, carrier: CarrierConfig) -> np.ndarray:
    """Pure-LOS phases of the guide-follower channels, one per follower.

    This is the default feedback used by the gain studies, where channel
    estimation between the guide and the followers is taken as perfect;
    the protocol simulation substitutes estimated phases.
    """
    pos = placement.positions()
    d = np.linalg.norm(pos[1:] - pos[0], axis=1)
    return 2.0 * np.pi * los_phase_cycles(d, carrier.wavelength_m)


def weights_guided(placement: Placement, guide_channel_phases: np.ndarray,
                   guide: GuideModel, rng=None) -> WeightVector:
    """Conjugate the guide-feedback phase at each follower.

    Follower i transmits with theta_i = -angle(g_i); the guide transmits
    as one of the combiners with zero phase when reciprocal, or a random
    offset otherwise.
    """
    guide_channel_phases = np.asarray(guide_channel_phases, dtype=float)
    if len(guide_channel_phases) != len(placement.followers):
        raise IncompleteFeedbackError(
            f"feedback covers {len(guide_channel_phases)} followers, "
            f"expected {len(placement.followers)}")
    theta = np.concatenate([[guide.guide_phase(rng)], -guide_channel_phases])
    return WeightVector(theta)


def weights_location(believed: Placement, carrier: CarrierConfig,
                     lx_m: float) -> WeightVector:
    """Phase-synchronized weights from believed positions only.

    Radio i advances its phase by 2 pi (x_i + lx) / lambda so the wave
    fronts align toward +x when the believed positions are exact. The sign
    follows this package's exp(+j 2 pi d / lambda) channel convention.
    """
    pos = believed.positions()
    d = pos[:, 0] + lx_m
    theta = 2.0 * np.pi * np.mod(d / carrier.wavelength_m, 1.0)
    return WeightVector(theta)


def weights_random(n: int, rng) -> WeightVector:
    """I.i.d. uniform random phases on [0, 2 pi)."""
    if n < 1:
        raise ValueError("need at least one radio")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    return WeightVector(rng.uniform(0.0, 2.0 * math.pi, n))


def weights_feedback_ideal(channels: ChannelRealization) -> WeightVector:
    """Exact conjugate phasing from perfectly known destination channels."""
    return WeightVector(-np.angle(channels.h))


def beampattern(placement: Placement, weights: WeightVector,
                carrier: CarrierConfig, radius_m: float,
                angle_grid_rad: np.ndarray) -> Beampattern:
    """Evaluate the combining gain at probe destinations around the cluster.

    Probes sit at radius * (cos phi, sin phi, 0) with pure-LOS channels.
    The radius should be at least 100x the array extent; smaller radii
    only trigger a warning so near-field curiosity stays possible.
    """
    angle_grid_rad = np.asarray(angle_grid_rad, dtype=float)
    if np.any(np.diff(angle_grid_rad) <= 0):
        raise ValueError("angle grid must be strictly increasing")
    pos = placement.positions()
    extent = np.max(np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1))
    if radius_m < 100.0 * extent:
        warnings.warn(
            f"probe radius {radius_m:.1f} m is below 100x the array extent "
            f"({extent:.2f} m); pattern may not be far-field", FarFieldWarning)
    probes = radius_m * np.stack([np.cos(angle_grid_rad),
                                  np.sin(angle_grid_rad),
                                  np.zeros_like(angle_grid_rad)], axis=1)
    # distances: (angles, radios)
    d = np.linalg.norm(probes[:, None, :] - pos[None, :, :], axis=-1)
    h = np.exp(2j * np.pi * los_phase_cycles(d, carrier.wavelength_m))
    num = np.abs(h @ weights.weights())
    gains = num / weights.n_radios
    return Beampattern(angles_rad=angle_grid_rad, gains=gains, radius_m=radius_m)
