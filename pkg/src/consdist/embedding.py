"""Embedding arithmetic for view disentanglement.

Keyword embeddings carry a subject plus whatever view preference the text
encoder baked into them. The routines here pull a view-specific residual
out of a view-augmented keyword embedding, strip prior-view residuals from
an embedding, and inject a target-view residual whose strength follows the
camera azimuth.

Embeddings are plain 1-D float64 numpy arrays.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import AzimuthOutOfRange, DimMismatch, MissingResidual, NonFinite, ZeroDirection

ZERO_TOL = 1e-12
ORTHO_RTOL = 1e-9


class ViewLabel(enum.Enum):
    FRONT = "front"
    SIDE = "side"
    BACK = "back"

    @property
    def azimuth(self) -> float:
        """Canonical azimuth in degrees (the side view sits at +90)."""
        return {"front": 0.0, "side": 90.0, "back": 180.0}[self.value]


#: Views whose residuals are removed before injection.
PRIOR_VIEWS = (ViewLabel.FRONT, ViewLabel.SIDE)


def as_embedding(values, name: str = "embedding") -> np.ndarray:
    """Validate and copy ``values`` into a finite 1-D float64 array."""
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise DimMismatch(f"{name} must be a non-empty 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFinite(f"{name} has non-finite entries")
    return arr


def _check_dims(u: np.ndarray, v: np.ndarray) -> None:
    if u.shape != v.shape:
        raise DimMismatch(f"dimension mismatch: {u.shape[0]} vs {v.shape[0]}")


@dataclass(frozen=True)
class ViewResidual:
    """View-specific direction extracted from a view-augmented keyword embedding."""

    view: ViewLabel
    delta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "delta", as_embedding(self.delta, "delta"))

    @property
    def dim(self) -> int:
        return self.delta.shape[0]


@dataclass(frozen=True)
class InjectionWeights:
    """Intensities of the azimuth-scheduled injection.

    ``w1`` scales the side residual in the frontal half, ``w2`` the back
    residual and ``w3`` the side residual in the rear half.
    """

    w1: float = 1.0
    w2: float = 1.5
    w3: float = 1.0

    def __post_init__(self):
        for name in ("w1", "w2", "w3"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"injection weight {name} must be finite and >= 0, got {value}")
            object.__setattr__(self, name, value)


def project(u, v) -> np.ndarray:
    """Projection of ``u`` onto the line spanned by ``v``: ``(u.v / |v|^2) v``."""
    u = as_embedding(u, "u")
    v = as_embedding(v, "v")
    _check_dims(u, v)
    vv = float(v @ v)
    if math.sqrt(vv) < ZERO_TOL:
        raise ZeroDirection("cannot project onto a zero-norm direction")
    return (float(u @ v) / vv) * v


def extract_view_residual(v_view, v_base, view: ViewLabel = ViewLabel.FRONT) -> ViewResidual:
    """Return the part of ``v_view`` orthogonal to ``v_base``, tagged with ``view``."""
    v_view = as_embedding(v_view, "v_view")
    v_base = as_embedding(v_base, "v_base")
    _check_dims(v_view, v_base)
    return ViewResidual(view, v_view - project(v_view, v_base))


def eliminate_prior(v, residuals: Iterable[ViewResidual]) -> np.ndarray:
    """Subtract the projection of ``v`` onto every residual direction.

    All projections are taken against the original ``v`` and summed, so
    residuals that are not mutually orthogonal can remove a shared component
    more than once. Residuals with near-zero norm are skipped.
    """
    v = as_embedding(v, "v")
    out = v.copy()
    for res in residuals:
        _check_dims(v, res.delta)
        if np.linalg.norm(res.delta) < ZERO_TOL:
            continue
        out -= project(v, res.delta)
    return out


def _require(residuals: Mapping[ViewLabel, ViewResidual], view: ViewLabel) -> ViewResidual:
    try:
        return residuals[view]
    except KeyError:
        raise MissingResidual(f"no residual for view {view.value!r}") from None


def _prior_residuals(residuals: Mapping[ViewLabel, ViewResidual]) -> list[ViewResidual]:
    return [residuals[label] for label in PRIOR_VIEWS if label in residuals]


def injection_coefficients(azimuth: float, weights: InjectionWeights) -> tuple[float, float]:
    """(side, back) residual coefficients for an azimuth in (-180, 180].

    ``|r| == 90`` falls in the rear branch; with ``w1 == w3`` both branches
    give the same side coefficient there.
    """
    r = float(azimuth)
    if not math.isfinite(r) or not -180.0 < r <= 180.0:
        raise AzimuthOutOfRange(f"azimuth {azimuth!r} is outside (-180, 180]")
    a = abs(r)
    if a < 90.0:
        return weights.w1 * a / 90.0, 0.0
    return weights.w3 * (180.0 - a) / 90.0, weights.w2 * (a - 90.0) / 90.0


def inject_view(
    v,
    azimuth: float,
    residuals: Mapping[ViewLabel, ViewResidual],
    weights: InjectionWeights = InjectionWeights(),
) -> np.ndarray:
    """Eliminate the front/side prior from ``v``, then add azimuth-scheduled residuals."""
    side = _require(residuals, ViewLabel.SIDE)
    back = _require(residuals, ViewLabel.BACK)
    side_coeff, back_coeff = injection_coefficients(azimuth, weights)
    out = eliminate_prior(v, _prior_residuals(residuals))
    _check_dims(out, side.delta)
    _check_dims(out, back.delta)
    if side_coeff:
        out = out + side_coeff * side.delta
    if back_coeff:
        out = out + back_coeff * back.delta
    return out


def inject_2d_back(v, eta: float, residuals: Mapping[ViewLabel, ViewResidual]) -> np.ndarray:
    """Single-image control: prior elimination followed by ``eta`` times the back residual.

    ``eta`` has no default on purpose; pick it per prompt.
    """
    eta = float(eta)
    if not math.isfinite(eta):
        raise NonFinite("eta must be finite")
    back = _require(residuals, ViewLabel.BACK)
    out = eliminate_prior(v, _prior_residuals(residuals))
    _check_dims(out, back.delta)
    return out + eta * back.delta


def residuals_from_views(
    keyword, view_embeddings: Mapping[ViewLabel, Sequence[float]]
) -> dict[ViewLabel, ViewResidual]:
    """Extract one residual per view-augmented keyword embedding."""
    return {
        label: extract_view_residual(emb, keyword, label)
        for label, emb in view_embeddings.items()
    }
