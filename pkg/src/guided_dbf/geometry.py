"""Radio placement geometry for guided distributed beamforming.

Coordinate convention: the guide (radio 0) sits at the origin, the beam
points toward +x, and the followers occupy x < 0. All deployment sampling
is in the z = 0 plane; the 3D position type is kept for generality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class InvalidToleranceError(ValueError):
    """Raised when a path-mismatch tolerance is not strictly positive."""


@dataclass(frozen=True)
class Position3:
    """A point in meters relative to the guide at the origin."""

    x: float
    y: float
    z: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def distance_to(self, other: "Position3") -> float:
        return math.dist((self.x, self.y, self.z), (other.x, other.y, other.z))


#: Default destination used by the simulation studies: 10 km away on the
#: beam axis, far field for any desk-scale deployment rectangle.
DEFAULT_DESTINATION = Position3(10_000.0, 0.0, 0.0)


@dataclass(frozen=True)
class DeploymentSpec:
    """Follower deployment rectangle and guide separation.

    The followers are confined to a rectangle of size ``lx_m`` by ``ly_m``
    centered on the beam axis, starting ``dx_m`` behind the guide.
    """

    lx_m: float
    ly_m: float
    dx_m: float
    n_followers: int
    plane: bool = True  # z = 0 for every study; 3D sampling is out of scope

    def __post_init__(self):
        if self.lx_m < 0 or self.ly_m < 0 or self.dx_m < 0:
            raise ValueError("deployment dimensions must be nonnegative")
        if self.n_followers < 1:
            raise ValueError("need at least one follower")
        if not self.plane:
            raise ValueError("only planar (z=0) deployments are supported")


@dataclass(frozen=True)
class Placement:
    """Guide, followers, and destination positions for one trial.

    Radios are ordered guide first, then followers; ``positions()`` returns
    them as an (N, 3) array in that order.
    """

    guide: Position3
    followers: tuple[Position3, ...]
    destination: Position3 = DEFAULT_DESTINATION

    @property
    def n_radios(self) -> int:
        return 1 + len(self.followers)

    def positions(self) -> np.ndarray:
        return np.vstack([self.guide.as_array()]
                         + [f.as_array() for f in self.followers])


@dataclass(frozen=True)
class MismatchBound:
    """Worst-case propagation-path mismatch over a deployment rectangle.

    ``delta_m`` is the mismatch tolerance achieved by the bound, i.e. the
    smallest tolerance the rectangle satisfies; ``phi_max_rad`` is its phase
    equivalent once a wavelength is bound.
    """

    e_max_m: float
    phi_max_rad: float
    delta_m: float


@dataclass(frozen=True)
class LocalizationError:
    """Uniform per-axis position uncertainty of range ``delta_p_m``.

    Each radio's true position deviates from its intended one by offsets
    drawn uniformly on [-delta_p_m/2, +delta_p_m/2] per axis.
    """

    delta_p_m: float

    def __post_init__(self):
        if self.delta_p_m < 0:
            raise ValueError("error range must be nonnegative")


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def separation_bound(ly_m: float, delta_m: float) -> float:
    """Minimum guide separation keeping the worst path mismatch below delta.

    Returns ((ly/2)^2 - delta^2) / (2 delta), clamped at zero: a negative
    bound means any nonnegative separation already satisfies the tolerance.
    The separation scales quadratically with the vertical spread.
    """
    if delta_m <= 0:
        raise InvalidToleranceError(
            f"mismatch tolerance must be > 0, got {delta_m}")
    return max(0.0, ((ly_m / 2.0) ** 2 - delta_m ** 2) / (2.0 * delta_m))


def path_mismatch(p: Position3) -> float:
    """Propagation-path mismatch of a follower relative to the guide.

    Under the far-field parallel-ray approximation the follower's signal
    travels ``|p| + p.x`` meters further than if it passed through the
    guide, so a follower exactly on the beam axis behind the guide has
    zero mismatch. The result is always nonnegative.
    """
    return math.hypot(p.x, p.y, p.z) + p.x


def worst_case_mismatch(spec: DeploymentSpec,
                        wavelength_m: float | None = None) -> MismatchBound:
    """Upper bound of the path mismatch over the deployment rectangle.

    The mismatch is maximized at the rectangle corner nearest the guide:
    e_max = sqrt(dx^2 + (ly/2)^2) - dx. The phase bound requires a
    wavelength; without one it is reported as NaN.
    """
    e_max = math.hypot(spec.dx_m, spec.ly_m / 2.0) - spec.dx_m
    phi_max = 2.0 * math.pi * e_max / wavelength_m if wavelength_m else math.nan
    return MismatchBound(e_max_m=e_max, phi_max_rad=phi_max, delta_m=e_max)


def sample_placement(spec: DeploymentSpec, rng,
                     destination: Position3 = DEFAULT_DESTINATION) -> Placement:
    """Draw followers i.i.d. uniform over the deployment rectangle.

    Followers land in [-dx - lx, -dx] x [-ly/2, +ly/2] at z = 0; the guide
    stays at the origin. Deterministic for a fixed seed.
    """
    rng = _as_rng(rng)
    xs = rng.uniform(-spec.dx_m - spec.lx_m, -spec.dx_m, spec.n_followers)
    ys = rng.uniform(-spec.ly_m / 2.0, spec.ly_m / 2.0, spec.n_followers)
    followers = tuple(Position3(float(x), float(y), 0.0) for x, y in zip(xs, ys))
    return Placement(guide=Position3(0.0, 0.0, 0.0), followers=followers,
                     destination=destination)


def apply_localization_error(placement: Placement, err: LocalizationError,
                             rng, perfect_guide: bool = False) -> Placement:
    """Perturb every radio's position by its localization error.

    The returned placement holds the radios' true positions when the
    intended ones are ``placement``: each radio lands offset by a uniform
    draw per axis. The coordinate origin itself stays fixed; with
    ``perfect_guide`` the guide reaches its waypoint exactly and only the
    followers are perturbed. The destination is unaffected.
    """
    rng = _as_rng(rng)
    n = placement.n_radios
    half = err.delta_p_m / 2.0
    dx = rng.uniform(-half, half, n)
    dy = rng.uniform(-half, half, n)
    if perfect_guide:
        dx[0] = 0.0
        dy[0] = 0.0
    guide = Position3(placement.guide.x + dx[0], placement.guide.y + dy[0],
                      placement.guide.z)
    followers = tuple(
        Position3(f.x + dx[i + 1], f.y + dy[i + 1], f.z)
        for i, f in enumerate(placement.followers))
    return Placement(guide=guide, followers=followers,
                     destination=placement.destination)
