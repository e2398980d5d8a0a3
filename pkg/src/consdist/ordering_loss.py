"""Similarity-based partial-order loss.

Given rendered-view features, a reference feature and an :class:`OrderingPlan`,
the loss penalises every consecutive pair of ranked views whose actual
cosine similarity to the reference increases where the plan expects it to
decrease::

    L = sum_i max(0, s[i+1] - s[i])

with ``s`` listed in ascending expected-distance order. Gradients are exact
(cosine chain rule) and include the reference feature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimMismatch, NonFinite, TooFewViews, ZeroNorm
from .geometry import OrderingPlan

NORM_TOL = 1e-12


def as_feature(values, name: str = "feature") -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise DimMismatch(f"{name} must be a non-empty 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFinite(f"{name} has non-finite entries")
    return arr


def _norm(x: np.ndarray) -> float:
    n = float(np.linalg.norm(x))
    if n <= NORM_TOL:
        raise ZeroNorm("cosine similarity needs non-zero features")
    return n


def cosine_sim(a, b) -> float:
    """Cosine similarity clamped to [-1, 1]."""
    a = as_feature(a, "a")
    b = as_feature(b, "b")
    if a.shape != b.shape:
        raise DimMismatch(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    s = float(a @ b) / (_norm(a) * _norm(b))
    return min(1.0, max(-1.0, s))


def _cosine_with_grads(a: np.ndarray, b: np.ndarray):
    # d cos / d a = b/(|a||b|) - cos * a/|a|^2, and symmetrically for b
    na, nb = _norm(a), _norm(b)
    s = float(a @ b) / (na * nb)
    ga = b / (na * nb) - s * a / (na * na)
    gb = a / (na * nb) - s * b / (nb * nb)
    return s, ga, gb


@dataclass
class LossReport:
    value: float
    violations: int
    gradients: list[np.ndarray]
    reference_gradient: np.ndarray
    similarities: np.ndarray = field(default_factory=lambda: np.zeros(0))


@dataclass(frozen=True)
class LossConfig:
    kappa: float = 0.6

    def __post_init__(self):
        k = float(self.kappa)
        if not math.isfinite(k) or k < 0:
            raise ValueError(f"kappa must be finite and >= 0, got {self.kappa!r}")
        object.__setattr__(self, "kappa", k)


def _prepare(features, reference, plan: OrderingPlan):
    ref = as_feature(reference, "reference")
    feats = [as_feature(f, f"features[{i}]") for i, f in enumerate(features)]
    for f in feats:
        if f.shape != ref.shape:
            raise DimMismatch(f"feature dim {f.shape[0]} != reference dim {ref.shape[0]}")
    order = plan.order
    if len(order) < 2:
        raise TooFewViews(f"need at least 2 ranked views, got {len(order)}")
    for idx in order:
        if not 0 <= idx < len(feats):
            raise IndexError(f"plan refers to view {idx} but only {len(feats)} features given")
    return feats, ref, order


def partial_order_loss(features: Sequence, reference, plan: OrderingPlan, tol: float = 0.0,
                       skip_ties: bool = False) -> LossReport:
    """Hinge loss over consecutive ranked views, with exact gradients.

    A hinge is active only when ``s[i+1] - s[i] > tol``; at the kink the
    subgradient is taken as zero. With ``skip_ties`` a pair whose expected
    distances agree within 1e-9 carries no preference and is left out.
    ``similarities`` in the report follows rank order.
    """
    feats, ref, order = _prepare(features, reference, plan)
    sims = np.empty(len(order))
    grad_f = []
    grad_r = []
    for k, idx in enumerate(order):
        s, ga, gr = _cosine_with_grads(feats[idx], ref)
        sims[k] = s
        grad_f.append(ga)
        grad_r.append(gr)

    gradients = [np.zeros_like(ref) for _ in feats]
    ref_grad = np.zeros_like(ref)
    value = 0.0
    violations = 0
    dists = [d for _, d in plan.ranked]
    for k in range(len(order) - 1):
        if skip_ties and dists[k + 1] - dists[k] <= 1e-9:
            continue
        gap = sims[k + 1] - sims[k]
        if gap > tol:
            value += gap
            violations += 1
            gradients[order[k + 1]] += grad_f[k + 1]
            gradients[order[k]] -= grad_f[k]
            ref_grad += grad_r[k + 1] - grad_r[k]
    return LossReport(value, violations, gradients, ref_grad, sims)


def _loss_value(feats, ref, order) -> float:
    sims = [float(feats[i] @ ref) / (np.linalg.norm(feats[i]) * np.linalg.norm(ref)) for i in order]
    return sum(max(0.0, b - a) for a, b in zip(sims[:-1], sims[1:]))


def finite_difference_gradient(features, reference, plan: OrderingPlan, step: float = 1e-4,
                               with_reference: bool = False):
    """Central-difference gradient of the loss value, one array per feature.

    With ``with_reference=True`` returns ``(feature_grads, reference_grad)``.
    """
    if not 1e-6 <= step <= 1e-3:
        raise ValueError(f"step must lie in [1e-6, 1e-3], got {step}")
    feats, ref, order = _prepare(features, reference, plan)
    feats = [f.copy() for f in feats]
    ref = ref.copy()

    def central(vec: np.ndarray) -> np.ndarray:
        out = np.zeros_like(vec)
        for j in range(vec.shape[0]):
            orig = vec[j]
            vec[j] = orig + step
            up = _loss_value(feats, ref, order)
            vec[j] = orig - step
            down = _loss_value(feats, ref, order)
            vec[j] = orig
            out[j] = (up - down) / (2.0 * step)
        return out

    grads = [central(f) for f in feats]
    if with_reference:
        return grads, central(ref)
    return grads


def total_loss(score_loss: float, lp: float, config: LossConfig = LossConfig()) -> float:
    score_loss, lp = float(score_loss), float(lp)
    if not (math.isfinite(score_loss) and math.isfinite(lp)):
        raise NonFinite("total_loss inputs must be finite")
    return score_loss + config.kappa * lp
