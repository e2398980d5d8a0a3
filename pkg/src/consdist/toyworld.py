"""Desk-scale stand-ins for the 3D object, renderer and biased 2D teacher.

The object is a ring of ``K`` azimuth bins, each holding a ``D``-dim feature
row. Bin ``k`` is centred at ``-180 + (k + 1) * 360 / K`` degrees, so the
centres include 0 and 180. Rendering linearly interpolates between the two
bins that bracket the camera azimuth, wrapping around the circle.

The teacher knows a canonical appearance per view (front at 0, side at
+/-90, back at 180) and interpolates between them on the sphere. It also
carries a prior preference for one view, mixed in with weight ``beta``, which
is what drives the multi-face failure in the simulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .embedding import ViewLabel, as_embedding
from .errors import DimMismatch
from .geometry import CameraPose
from .ordering_loss import as_feature, cosine_sim


@dataclass
class ToyObject:
    bins: np.ndarray

    def __post_init__(self):
        b = np.array(self.bins, dtype=np.float64)
        if b.ndim != 2 or b.shape[0] < 4 or b.shape[1] < 2:
            raise ValueError(f"bins must be a K x D matrix with K >= 4, D >= 2; got {b.shape}")
        if not np.all(np.isfinite(b)):
            raise ValueError("bins must be finite")
        self.bins = b

    @property
    def n_bins(self) -> int:
        return self.bins.shape[0]

    @property
    def dims(self) -> int:
        return self.bins.shape[1]

    def copy(self) -> "ToyObject":
        return ToyObject(self.bins.copy())


def bin_centers(n_bins: int) -> np.ndarray:
    return -180.0 + (np.arange(n_bins) + 1) * (360.0 / n_bins)


@dataclass(frozen=True)
class RenderedFeature:
    pose: CameraPose
    feature: np.ndarray
    # interpolation stencil: feature = (1 - frac) * bins[lo] + frac * bins[hi]
    lo: int = 0
    hi: int = 0
    frac: float = 0.0

    def jacobian_weights(self) -> tuple[tuple[int, float], tuple[int, float]]:
        return (self.lo, 1.0 - self.frac), (self.hi, self.frac)


def interpolation_stencil(n_bins: int, azimuth: float) -> tuple[int, int, float]:
    pos = (azimuth + 180.0) * n_bins / 360.0 - 1.0
    base = math.floor(pos)
    frac = pos - base
    lo = int(base) % n_bins
    return lo, (lo + 1) % n_bins, frac


def render(world: ToyObject, pose: CameraPose) -> RenderedFeature:
    lo, hi, frac = interpolation_stencil(world.n_bins, pose.azimuth)
    feat = (1.0 - frac) * world.bins[lo] + frac * world.bins[hi]
    return RenderedFeature(pose, feat, lo, hi, frac)


def backprop_to_bins(world: ToyObject, rendered: RenderedFeature, grad: np.ndarray, scale: float) -> None:
    """In-place ``bins += scale * J^T grad`` through the render stencil."""
    for idx, w in rendered.jacobian_weights():
        if w:
            world.bins[idx] += (scale * w) * grad


def slerp(a: np.ndarray, b: np.ndarray, t: float) -> np.ndarray:
    """Spherical interpolation between ``a`` (t=0) and ``b`` (t=1), lengths blended linearly."""
    if t <= 0.0:
        return a.copy()
    if t >= 1.0:
        return b.copy()
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    ua, ub = a / na, b / nb
    omega = math.acos(min(1.0, max(-1.0, float(ua @ ub))))
    if omega < 1e-12:
        return (1 - t) * a + t * b
    so = math.sin(omega)
    direction = (math.sin((1 - t) * omega) * ua + math.sin(t * omega) * ub) / so
    return ((1 - t) * na + t * nb) * direction


def _view_path(front, side_pos, side_neg, back, azimuth: float) -> np.ndarray:
    side = side_pos if azimuth >= 0 else side_neg
    a = abs(azimuth)
    if a <= 90.0:
        return slerp(front, side, a / 90.0)
    return slerp(side, back, (a - 90.0) / 90.0)


@dataclass
class BiasedTeacher:
    """Closed-form view-biased score provider.

    Parameters
    ----------
    templates : mapping ViewLabel -> (D,) array
        Canonical appearance of each view. The side template is the
        appearance at +90 degrees.
    view_codes : mapping ViewLabel -> (E,) array
        Directions in prompt-embedding space that the teacher associates
        with each view; alignment between a conditioning embedding and the
        interpolated code decides how much of the score follows the camera.
    beta : float
        Strength of the prior view preference, in [0, 1].
    preferred : ViewLabel
        The view the prior pulls toward.
    side_mirror : (D,) array, optional
        Appearance at -90 degrees. ``None`` reuses the side template, which
        makes the target path symmetric under ``r -> -r``.
    prior_direction : (E,) array, optional
        Embedding direction of the prompt's built-in view bias. Used to
        scale the tilt in :func:`teacher_probability` for a conditioning.
    concentration : float
        Sharpness of the preferred-view bump in the view distribution.
    """

    templates: Mapping[ViewLabel, np.ndarray]
    view_codes: Mapping[ViewLabel, np.ndarray]
    beta: float = 0.8
    preferred: ViewLabel = ViewLabel.FRONT
    side_mirror: Optional[np.ndarray] = None
    prior_direction: Optional[np.ndarray] = None
    concentration: float = 2.0
    guidance_scale: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        self.templates = {k: as_feature(v, f"template {k.value}") for k, v in self.templates.items()}
        self.view_codes = {k: as_embedding(v, f"view code {k.value}") for k, v in self.view_codes.items()}
        for label in ViewLabel:
            if label not in self.templates or label not in self.view_codes:
                raise ValueError(f"teacher needs a template and a view code for {label.value!r}")
        dims = {t.shape[0] for t in self.templates.values()}
        if len(dims) != 1:
            raise DimMismatch("templates must share one dimension")
        if self.side_mirror is not None:
            self.side_mirror = as_feature(self.side_mirror, "side_mirror")
        shapes = list(self.templates.values())
        if self.side_mirror is not None:
            shapes.append(self.side_mirror)
        for i in range(len(shapes)):
            for j in range(i + 1, len(shapes)):
                if cosine_sim(shapes[i], shapes[j]) >= 0.99:
                    raise ValueError("teacher templates must be pairwise distinct (cosine < 0.99)")

    @property
    def dims(self) -> int:
        return self.templates[ViewLabel.FRONT].shape[0]

    @property
    def embed_dim(self) -> int:
        return self.view_codes[ViewLabel.FRONT].shape[0]

    def template(self, label: ViewLabel) -> np.ndarray:
        return self.templates[label]

    def target(self, azimuth: float) -> np.ndarray:
        """Per-azimuth target appearance T(r)."""
        t = self.templates
        mirror = t[ViewLabel.SIDE] if self.side_mirror is None else self.side_mirror
        return _view_path(t[ViewLabel.FRONT], t[ViewLabel.SIDE], mirror, t[ViewLabel.BACK], azimuth)

    def view_direction(self, azimuth: float) -> np.ndarray:
        """Embedding-space direction of the view a camera at ``azimuth`` should see."""
        c = self.view_codes
        return _view_path(c[ViewLabel.FRONT], c[ViewLabel.SIDE], c[ViewLabel.SIDE], c[ViewLabel.BACK], azimuth)


@dataclass(frozen=True)
class ScoreBundle:
    conditional: np.ndarray
    unconditional: np.ndarray

    def guidance(self, scale: float = 1.0) -> np.ndarray:
        return self.unconditional + scale * self.conditional


def alignment(injected: np.ndarray, direction: np.ndarray) -> float:
    """``(1 + cos) / 2`` between a conditioning embedding and a view direction."""
    if injected.shape != direction.shape:
        raise DimMismatch(
            f"conditioning dim {injected.shape[0]} != teacher embedding dim {direction.shape[0]}"
        )
    ni, nd = np.linalg.norm(injected), np.linalg.norm(direction)
    if ni < 1e-12 or nd < 1e-12:
        return 0.5
    c = min(1.0, max(-1.0, float(injected @ direction) / (ni * nd)))
    return 0.5 * (1.0 + c)


def teacher_score(teacher: BiasedTeacher, rendered: RenderedFeature, conditioning) -> ScoreBundle:
    """Conditional and unconditional scores for one rendered view.

    The unconditional score always leans toward the preferred template by
    ``beta``. The conditional score follows the camera's target in
    proportion to how well ``conditioning.injected`` matches the camera's
    view direction; the remaining misalignment hands the pull to the prior.
    """
    feat = rendered.feature
    if feat.shape[0] != teacher.dims:
        raise DimMismatch(f"rendered dim {feat.shape[0]} != teacher dim {teacher.dims}")
    az = rendered.pose.azimuth
    target = teacher.target(az)
    pref = teacher.template(teacher.preferred)
    beta = teacher.beta
    unconditional = (1.0 - beta) * target + beta * pref - feat
    al = alignment(np.asarray(conditioning.injected, dtype=np.float64), teacher.view_direction(az))
    conditional = al * (target - feat) + (1.0 - al) * beta * (pref - feat)
    return ScoreBundle(conditional, unconditional)


def view_bias_strength(teacher: BiasedTeacher, view_bias: Optional[np.ndarray]) -> float:
    """How much of the prompt's built-in view preference survives in ``view_bias`` (0..1)."""
    if teacher.prior_direction is None or view_bias is None:
        return 1.0
    vb = np.asarray(view_bias, dtype=np.float64)
    nv, npd = np.linalg.norm(vb), np.linalg.norm(teacher.prior_direction)
    if nv < 1e-12 or npd < 1e-12:
        return 0.0
    return min(1.0, max(0.0, float(vb @ teacher.prior_direction) / (nv * npd)))


def _preference_bump(teacher: BiasedTeacher, azimuths: np.ndarray) -> np.ndarray:
    # symmetric in r: both +90 and -90 count as the side view
    delta = np.radians(np.abs(azimuths) - teacher.preferred.azimuth)
    return np.exp(teacher.concentration * np.cos(delta))


def teacher_probability(teacher: BiasedTeacher, pose: CameraPose, with_view_bias: bool,
                        n_bins: int = 32, strength: float = 1.0) -> float:
    """Probability that the teacher produces content consistent with ``pose``.

    The marginal is uniform over the ``n_bins`` bin centres (cameras are
    sampled uniformly). With the view bias, the uniform law is mixed with a
    von Mises bump on the preferred view at weight ``beta * strength``.
    Both variants sum to one over the bin centres.
    """
    if not with_view_bias:
        return 1.0 / n_bins
    b = teacher.beta * min(1.0, max(0.0, strength))
    if b == 0.0:
        return 1.0 / n_bins
    bumps = _preference_bump(teacher, bin_centers(n_bins))
    here = _preference_bump(teacher, np.array([pose.azimuth]))[0]
    return (1.0 - b) / n_bins + b * here / float(bumps.sum())


def janus_metric(world: ToyObject, teacher: BiasedTeacher) -> float:
    """Fraction of bins that look more like the preferred view than like their own target.

    This is the simulator's stand-in for the multi-face frequency. Bins
    whose own target is the preferred template are not counted.
    """
    pref = teacher.template(teacher.preferred)
    eligible = 0
    corrupted = 0
    for k, az in enumerate(bin_centers(world.n_bins)):
        target = teacher.target(float(az))
        if cosine_sim(target, pref) >= 1.0 - 1e-12:
            continue
        eligible += 1
        row = world.bins[k]
        if cosine_sim(row, pref) > cosine_sim(row, target):
            corrupted += 1
    return corrupted / eligible if eligible else 0.0


def similarity_profile(world: ToyObject, reference: CameraPose, samples: int = 32) -> list[tuple[float, float]]:
    """Cosine similarity of rendered views to the reference render, sorted by azimuth."""
    if samples < 8:
        raise ValueError("similarity_profile needs at least 8 samples")
    ref = render(world, reference).feature
    out = []
    for az in bin_centers(samples):
        feat = render(world, CameraPose(float(az))).feature
        out.append((float(az), cosine_sim(feat, ref)))
    return out


def target_world(teacher: BiasedTeacher, n_bins: int) -> ToyObject:
    """World whose every bin equals its own target."""
    return ToyObject(np.stack([teacher.target(float(a)) for a in bin_centers(n_bins)]))


@dataclass(frozen=True)
class LinearEncoder:
    """Linear feature encoder ``x -> A x``; gradients pull back through ``A.T``."""

    matrix: np.ndarray

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    def pullback(self, grad: np.ndarray) -> np.ndarray:
        return self.matrix.T @ grad


def identity_encoder(dims: int) -> LinearEncoder:
    return LinearEncoder(np.eye(dims))


def fold_encoder(teacher: BiasedTeacher) -> LinearEncoder:
    """Encoder that cannot tell front from back or left from right-mirrored.

    It sums the front and back coordinates and takes the difference between
    the two side appearances, keeping everything orthogonal to those four
    directions. A view at ``r`` and one at ``180 - r`` encode identically, so
    encoded similarity falls with distance to the nearer of a reference and
    its mirror.
    """
    t = teacher.templates
    if teacher.side_mirror is None:
        raise ValueError("fold_encoder needs a teacher with a distinct side_mirror template")
    f, s, b, m = (t[ViewLabel.FRONT], t[ViewLabel.SIDE], t[ViewLabel.BACK], teacher.side_mirror)
    basis = np.stack([f, s, b, m])
    q, _ = np.linalg.qr(basis.T)
    if np.linalg.matrix_rank(basis) < 4:
        raise ValueError("fold_encoder needs four linearly independent templates")
    rest = np.eye(teacher.dims) - q @ q.T
    # orthonormal complement basis
    u, sv, _ = np.linalg.svd(rest)
    comp = u[:, sv > 0.5].T
    fold = np.stack([
        (f / np.linalg.norm(f) + b / np.linalg.norm(b)) / math.sqrt(2.0),
        (s / np.linalg.norm(s) - m / np.linalg.norm(m)) / math.sqrt(2.0),
    ])
    return LinearEncoder(np.vstack([fold, comp]))


def default_teacher(dims: int = 8, embed_dim: int = 16, beta: float = 0.8, seed: int = 0,
                    preferred: ViewLabel = ViewLabel.FRONT, view_strength: float = 2.0):
    """Build the default teacher and the matching prompt embeddings.

    Feature templates are the first four standard basis vectors (front,
    side at +90, back, side at -90). Embedding-space view codes and the
    subject are random orthonormal vectors drawn from ``seed``; appending a
    view description moves the keyword embedding by ``view_strength`` along
    that view's code.

    Returns
    -------
    teacher : BiasedTeacher
    keyword : (E,) array
        Keyword embedding: subject plus a built-in front/side preference.
    subject : (E,) array
    view_embeddings : dict ViewLabel -> (E,) array
        Keyword embeddings of the view-augmented prompts.
    """
    if dims < 4:
        raise ValueError("default teacher needs dims >= 4")
    if embed_dim < 4:
        raise ValueError("default teacher needs embed_dim >= 4")
    eye = np.eye(dims)
    templates = {ViewLabel.FRONT: eye[0], ViewLabel.SIDE: eye[1], ViewLabel.BACK: eye[2]}
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((embed_dim, 4)))
    subject, u_front, u_side, u_back = q.T
    codes = {ViewLabel.FRONT: u_front, ViewLabel.SIDE: u_side, ViewLabel.BACK: u_back}
    prior = 0.8 * u_front + 0.4 * u_side
    keyword = subject + prior
    view_embeddings = {label: keyword + view_strength * codes[label] for label in ViewLabel}
    teacher = BiasedTeacher(templates, codes, beta=beta, preferred=preferred,
                            side_mirror=eye[3], prior_direction=prior)
    return teacher, keyword, subject, view_embeddings
