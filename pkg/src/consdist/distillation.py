"""Score distillation against the toy teacher.

One iteration samples a batch of cameras, renders each, asks the teacher for
its conditional and unconditional scores and moves the rendered bins along
the combined guidance. How the conditioning embedding is formed is the
ablation axis:

``Baseline``
    the raw keyword embedding, view preference included;
``PerpNeg``
    raw embedding, plus a front-view negative whose score component
    perpendicular to the positive score is subtracted;
``VDM``
    prior view residuals eliminated, target residual injected by azimuth.

Optionally the partial-order loss on the batch's encoded renders is added
with weight ``kappa``.
"""

from __future__ import annotations

import math
import platform
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .config import Mode, RunConfig
from .embedding import (
    InjectionWeights,
    ViewLabel,
    ViewResidual,
    as_embedding,
    inject_view,
    project,
    residuals_from_views,
)
from .errors import DegenerateDistribution, DimMismatch, ZeroDirection
from .geometry import CameraPose, expected_order, sample_azimuths
from .ordering_loss import as_feature, partial_order_loss
from .toyworld import (
    BiasedTeacher,
    LinearEncoder,
    RenderedFeature,
    ScoreBundle,
    ToyObject,
    backprop_to_bins,
    bin_centers,
    default_teacher,
    fold_encoder,
    identity_encoder,
    janus_metric,
    render,
    teacher_probability,
    teacher_score,
    view_bias_strength,
)

PERP_NEG_VIEW = ViewLabel.FRONT


@dataclass(frozen=True)
class Conditioning:
    subject: np.ndarray
    view_bias: np.ndarray
    injected: np.ndarray


def decompose_prompt(c, c_sbj, injected=None) -> Conditioning:
    """Split ``c`` into the subject direction and the orthogonal view bias.

    ``injected`` is what the teacher actually sees; it defaults to ``c``.
    """
    c = as_embedding(c, "c")
    c_sbj = as_embedding(c_sbj, "c_sbj")
    view_bias = c - project(c, c_sbj)
    inj = c.copy() if injected is None else as_embedding(injected, "injected")
    if inj.shape != c.shape:
        raise DimMismatch("injected embedding must match the prompt dimension")
    return Conditioning(c_sbj, view_bias, inj)


@dataclass
class Prompt:
    """Keyword embeddings for one prompt and the view residuals derived from them."""

    keyword: np.ndarray
    subject: np.ndarray
    view_embeddings: dict
    residuals: dict = field(init=False)

    def __post_init__(self):
        self.keyword = as_embedding(self.keyword, "keyword")
        self.subject = as_embedding(self.subject, "subject")
        self.view_embeddings = {k: as_embedding(v, f"view {k.value}") for k, v in self.view_embeddings.items()}
        self.residuals = residuals_from_views(self.keyword, self.view_embeddings)


def condition(prompt: Prompt, pose: CameraPose, mode: Mode,
              weights: InjectionWeights = InjectionWeights()) -> Conditioning:
    """Conditioning the teacher receives for ``pose`` under ``mode``."""
    if mode is Mode.VDM:
        injected = inject_view(prompt.keyword, pose.azimuth, prompt.residuals, weights)
    else:
        injected = prompt.keyword
    return decompose_prompt(injected, prompt.subject)


def negative_conditioning(prompt: Prompt, label: ViewLabel = PERP_NEG_VIEW) -> Conditioning:
    """Conditioning of the view-augmented prompt used as a Perp-Neg negative."""
    return decompose_prompt(prompt.view_embeddings[label], prompt.subject)


@dataclass(frozen=True)
class CompatibilityM:
    value: float


def compatibility(pose: CameraPose, conditioning: Conditioning, world: ToyObject,
                  teacher: BiasedTeacher) -> CompatibilityM:
    """Ratio ``p(view | view bias, Z) / p(view | Z)`` from the teacher's closed form.

    Values near 1 mean the conditioning's leftover view bias does not fight
    the camera. Diagnostic only; nothing is differentiated through it.
    """
    strength = view_bias_strength(teacher, conditioning.view_bias)
    num = teacher_probability(teacher, pose, True, n_bins=world.n_bins, strength=strength)
    den = teacher_probability(teacher, pose, False, n_bins=world.n_bins)
    if den < 1e-12:
        raise DegenerateDistribution("marginal view probability vanished")
    return CompatibilityM(num / den)


def perp_neg_combine(pos, negs: Sequence[tuple]) -> np.ndarray:
    """``pos - sum_i w_i * (neg_i - proj_pos(neg_i))``.

    Only the part of each negative perpendicular to ``pos`` is removed; the
    parallel part stays in the positive score.
    """
    pos = as_feature(pos, "pos")
    if np.linalg.norm(pos) < 1e-12:
        raise ZeroDirection("positive score has zero norm")
    out = pos.copy()
    for neg, weight in negs:
        neg = as_feature(neg, "neg")
        if neg.shape != pos.shape:
            raise DimMismatch("negative score dimension differs from positive")
        out -= float(weight) * (neg - project(neg, pos))
    return out


def guidance(world: ToyObject, teacher: BiasedTeacher, pose: CameraPose, conditioning: Conditioning,
             mode: Mode, negative: Optional[Conditioning] = None,
             perp_neg_weight: float = 1.0) -> tuple[RenderedFeature, np.ndarray]:
    """Render ``pose`` and return the guidance score the update follows."""
    rendered = render(world, pose)
    bundle = teacher_score(teacher, rendered, conditioning)
    cond = bundle.conditional
    if mode is Mode.PERPNEG:
        if negative is None:
            raise ValueError("PerpNeg mode needs a negative conditioning")
        w = perp_neg_weight * abs(pose.azimuth) / 180.0
        # with no positive direction there is nothing to orthogonalise against
        if w > 0 and np.linalg.norm(cond) >= 1e-12:
            neg_view = RenderedFeature(CameraPose(PERP_NEG_VIEW.azimuth), rendered.feature)
            neg = teacher_score(teacher, neg_view, negative).conditional
            cond = perp_neg_combine(cond, [(neg, w)])
        bundle = ScoreBundle(cond, bundle.unconditional)
    return rendered, bundle.guidance(teacher.guidance_scale)


def distill_step(world: ToyObject, teacher: BiasedTeacher, pose: CameraPose, conditioning: Conditioning,
                 mode: Mode, lr: float, *, negative: Optional[Conditioning] = None,
                 perp_neg_weight: float = 1.0) -> ToyObject:
    """One guidance step for a single camera; returns a new world."""
    if lr < 0 or not math.isfinite(lr):
        raise ValueError("lr must be finite and >= 0")
    out = world.copy()
    if lr == 0:
        return out
    rendered, g = guidance(world, teacher, pose, conditioning, mode, negative, perp_neg_weight)
    backprop_to_bins(out, rendered, g, lr)
    return out


@dataclass(frozen=True)
class Snapshot:
    iteration: int
    janus_metric: float
    violations: int
    lp_value: float


@dataclass
class RunResult:
    config: RunConfig
    world: ToyObject
    teacher: BiasedTeacher
    score_loss: np.ndarray
    lp_value: np.ndarray
    snapshots: list[Snapshot]
    manifest: dict

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]


def build_scene(config: RunConfig):
    """Teacher, prompt and feature encoder for a config."""
    teacher, keyword, subject, views = default_teacher(
        config.dims, config.embed_dim, config.beta, seed=config.scene_seed
    )
    teacher.guidance_scale = config.guidance_scale
    prompt = Prompt(keyword, subject, views)
    encoder = fold_encoder(teacher) if config.encoder == "fold" else identity_encoder(config.dims)
    return teacher, prompt, encoder


def consistency_report(world: ToyObject, encoder: LinearEncoder) -> tuple[float, int]:
    """Partial-order loss of a world over a fixed grid of views.

    Every bin centre takes a turn as the reference against all the others.
    Returns the mean loss per reference and the total violation count.
    Grid views tie in expected distance, so tied pairs are skipped, and
    rounding-level gaps (below 1e-12) are not counted.
    """
    centers = bin_centers(world.n_bins)
    poses = [CameraPose(float(a)) for a in centers]
    feats = [encoder(render(world, p).feature) for p in poses]
    total = 0.0
    violations = 0
    for r, ref_pose in enumerate(poses):
        others = [i for i in range(len(poses)) if i != r]
        plan = expected_order(ref_pose, [poses[i] for i in others])
        rep = partial_order_loss([feats[i] for i in others], feats[r], plan, tol=1e-12, skip_ties=True)
        total += rep.value
        violations += rep.violations
    return total / len(poses), violations


def _snapshot(it: int, world: ToyObject, teacher: BiasedTeacher, encoder: LinearEncoder) -> Snapshot:
    lp, viol = consistency_report(world, encoder)
    return Snapshot(it, float(janus_metric(world, teacher)), int(viol), float(lp))


def run_distillation(config: RunConfig) -> RunResult:
    """Run the full optimisation loop described by ``config``.

    Camera azimuths and the L_P reference index are drawn from one generator
    seeded with ``config.seed`` in the same order for every mode, so cells of
    an ablation see identical camera sequences.
    """
    teacher, prompt, encoder = build_scene(config)
    rng = np.random.default_rng(config.seed)
    world = ToyObject(0.01 * rng.standard_normal((config.bins, config.dims)))
    negative = negative_conditioning(prompt)

    n = config.iterations
    score_trace = np.zeros(n)
    lp_trace = np.zeros(n)
    snapshots = []
    for it in range(1, n + 1):
        azimuths = sample_azimuths(config.batch, rng)
        ref_slot = int(rng.integers(config.batch))
        poses = [CameraPose(float(a)) for a in azimuths]

        steps = []
        sq = 0.0
        for pose in poses:
            cond = condition(prompt, pose, config.mode, config.weights)
            rendered, g = guidance(world, teacher, pose, cond, config.mode, negative, config.perp_neg_weight)
            steps.append((rendered, g))
            sq += 0.5 * float(g @ g)
        score_trace[it - 1] = sq / len(poses)

        lp_steps = []
        if config.batch >= 3:
            others = [i for i in range(len(poses)) if i != ref_slot]
            plan = expected_order(poses[ref_slot], [poses[i] for i in others])
            encoded = [encoder(steps[i][0].feature) for i in others]
            report = partial_order_loss(encoded, encoder(steps[ref_slot][0].feature), plan)
            lp_trace[it - 1] = report.value
            if config.lp_enabled and report.violations:
                for j, i in enumerate(others):
                    lp_steps.append((steps[i][0], encoder.pullback(report.gradients[j])))
                lp_steps.append((steps[ref_slot][0], encoder.pullback(report.reference_gradient)))

        # reduce in camera-index order
        for rendered, g in steps:
            backprop_to_bins(world, rendered, g, config.lr)
        for rendered, g in lp_steps:
            backprop_to_bins(world, rendered, g, -config.kappa * config.lr)

        if it % config.snapshot_interval == 0 or it == n:
            snapshots.append(_snapshot(it, world, teacher, encoder))

    manifest = {
        "config": dict(config.items()),
        "versions": {
            "consdist": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "seed": config.seed,
        "final_janus_metric": snapshots[-1].janus_metric,
        "final_lp_value": snapshots[-1].lp_value,
        "final_violations": snapshots[-1].violations,
    }
    return RunResult(config, world, teacher, score_trace, lp_trace, snapshots, manifest)
