"""View-consistency tools for score distillation, with a toy Janus simulator."""

__version__ = "0.1.0"

from .embedding import (
    InjectionWeights,
    ViewLabel,
    ViewResidual,
    eliminate_prior,
    extract_view_residual,
    inject_2d_back,
    inject_view,
    project,
)
from .geometry import (
    CameraPose,
    OrderingPlan,
    Region,
    azimuthal_distance,
    classify_region,
    expected_order,
    injection_weights,
    mirror_reference,
    normalize_azimuth,
    sample_cameras,
)
from .ordering_loss import (
    LossConfig,
    LossReport,
    cosine_sim,
    finite_difference_gradient,
    partial_order_loss,
    total_loss,
)
from .config import Mode, RunConfig, parse_config
from .toyworld import (
    BiasedTeacher,
    ToyObject,
    janus_metric,
    render,
    similarity_profile,
    teacher_probability,
    teacher_score,
)
from .distillation import (
    Conditioning,
    Prompt,
    compatibility,
    decompose_prompt,
    distill_step,
    perp_neg_combine,
    run_distillation,
)
