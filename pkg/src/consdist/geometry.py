"""Camera azimuth arithmetic.

All public angles are degrees. Poses live on the unit circle with azimuth
in the half-open range (-180, 180]; elevation is fixed at zero.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .embedding import InjectionWeights, injection_coefficients
from .errors import EmptyViews, NonFinite


def _wrap(raw: float) -> float:
    a = math.fmod(raw, 360.0)
    if a <= -180.0:
        a += 360.0
    elif a > 180.0:
        a -= 360.0
    return a


@dataclass(frozen=True)
class CameraPose:
    azimuth: float

    def __post_init__(self):
        a = float(self.azimuth)
        if not math.isfinite(a):
            raise NonFinite(f"azimuth must be finite, got {self.azimuth!r}")
        object.__setattr__(self, "azimuth", _wrap(a))


def normalize_azimuth(raw: float) -> CameraPose:
    """Map any finite angle onto (-180, 180]."""
    return CameraPose(raw)


class Region(enum.Enum):
    FRONTAL = "frontal"
    REAR = "rear"


def classify_region(pose: CameraPose) -> Region:
    return Region.FRONTAL if abs(pose.azimuth) < 90.0 else Region.REAR


def injection_weights(pose: CameraPose, weights: InjectionWeights = InjectionWeights()) -> tuple[float, float]:
    """Return ``(side_coeff, back_coeff)`` for ``pose``."""
    return injection_coefficients(pose.azimuth, weights)


def azimuthal_distance(a: CameraPose, b: CameraPose) -> float:
    """Smallest angular separation of two poses, in [0, 180]."""
    d = abs(a.azimuth - b.azimuth) % 360.0
    return min(d, 360.0 - d)


def mirror_reference(reference: CameraPose) -> CameraPose:
    """Reflect across the horizontal line through the reference (same y on the circle)."""
    return CameraPose(180.0 - reference.azimuth)


@dataclass(frozen=True)
class OrderingPlan:
    """Expected similarity order of views around a reference.

    ``ranked`` holds ``(view_index, distance)`` pairs sorted by ascending
    distance to the nearer of the reference and its mirror, ties kept in
    input order. A smaller distance means a higher expected similarity.
    """

    reference: CameraPose
    mirrored: CameraPose
    ranked: tuple[tuple[int, float], ...]

    @property
    def order(self) -> list[int]:
        return [idx for idx, _ in self.ranked]


def expected_order(reference: CameraPose, views: Sequence[CameraPose]) -> OrderingPlan:
    if len(views) == 0:
        raise EmptyViews("expected_order needs at least one view")
    mirrored = mirror_reference(reference)
    dists = [
        min(azimuthal_distance(v, reference), azimuthal_distance(v, mirrored)) for v in views
    ]
    # sorted() is stable, which gives input-order tie breaking
    ranked = tuple(sorted(enumerate(dists), key=lambda item: item[1]))
    return OrderingPlan(reference, mirrored, ranked)


def sample_azimuths(count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` azimuths uniformly from (-180, 180] using ``rng``."""
    return 180.0 - 360.0 * rng.random(count)


def sample_cameras(count: int, seed: int) -> list[CameraPose]:
    """Deterministic uniform camera sample for a given seed."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    return [CameraPose(a) for a in sample_azimuths(count, rng)]
