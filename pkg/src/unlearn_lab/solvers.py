"""Training, fine-tuning, retraining, and coordinate-mask model editing.

Three closed-form procedures cover the linear pipeline: the pretrained
model is the minimum-norm interpolant of the full data, the "unlearned"
model fine-tunes it by moving the shortest distance onto the constraint
set of a remaining-data subset, and the golden model retrains from
scratch on the remaining data only.  Editing zeroes the pretrained
coordinates tied to the forgetting block before fine-tuning, either
keeping or dropping the overlap block.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .errors import LayoutMismatchError
from .linalg import min_norm_anchor_solve, min_norm_solve, projector
from .scenarios import FeatureLayout, SyntheticScenario, decompose_w_star, fine_tune_subset


class EditOption(Enum):
    """How to zero out forgetting-related coordinates of a pretrained model.

    ``DISTINCT_ZERO_FORGET`` applies to layouts without an overlap block;
    the two overlap options keep or drop the overlap coordinates and are
    valid for any layout (they coincide when the overlap block is empty).
    """

    DISTINCT_ZERO_FORGET = "distinct-zero-forget"
    OVERLAP_RETAIN = "overlap-retain"
    OVERLAP_DISCARD = "overlap-discard"


def train_original(scenario: SyntheticScenario) -> np.ndarray:
    """Minimum-norm interpolant of the full (remaining + forgetting) data."""
    x, y = scenario.joint_data()
    return min_norm_solve(x, y)


def fine_tune_unlearn(w_o: np.ndarray, x_t, y_t) -> np.ndarray:
    """Fine-tune ``w_o`` onto the subset constraints ``X_t^T w = y_t``.

    Returns the interpolant of the subset nearest to the pretrained
    weights.  When ``w_o`` already fits the subset (always the case when
    the subset comes from the pretraining data) this is a no-op.
    """
    return min_norm_anchor_solve(x_t, y_t, w_o)


def retrain_golden(scenario: SyntheticScenario) -> np.ndarray:
    """Reference model: minimum-norm interpolant of the remaining data only."""
    return min_norm_solve(scenario.x_r, scenario.y_r)


def _validate_option(layout: FeatureLayout, option: EditOption) -> None:
    if option is EditOption.DISTINCT_ZERO_FORGET and layout.d_lap != 0:
        raise LayoutMismatchError(
            "distinct-zero-forget requires an empty overlap block, "
            f"but d_lap = {layout.d_lap}"
        )


def edit_pretrained(w_o: np.ndarray, layout: FeatureLayout, option: EditOption) -> np.ndarray:
    """Zero the forgetting-related coordinates of a pretrained model.

    ``DISTINCT_ZERO_FORGET`` and ``OVERLAP_DISCARD`` keep only the
    remaining-only block; ``OVERLAP_RETAIN`` keeps the remaining and
    overlap blocks.  Kept coordinates are copied unchanged, so the edit is
    idempotent and commutes with scalar rescaling of ``w_o``.
    """
    w_o = np.asarray(w_o, dtype=np.float64)
    if w_o.shape != (layout.d,):
        raise LayoutMismatchError(
            f"weights have shape {w_o.shape} but the layout has d = {layout.d}"
        )
    _validate_option(layout, option)
    keep = layout.d_r if option is not EditOption.OVERLAP_RETAIN else layout.d_r + layout.d_lap
    edited = w_o.copy()
    edited[keep:] = 0.0
    return edited


def closed_form_wt_distinct(scenario: SyntheticScenario, n_t: int) -> np.ndarray:
    """Projector-calculus reconstruction of the fine-tuned model.

    For layouts without an overlap block the fine-tuned model equals
    ``P w_r + (P - P_t) w_f``, where ``P`` projects onto the span of the
    full data and ``P_t`` onto the span of the fine-tuning subset.  Used
    as a cross-check against :func:`fine_tune_unlearn`.
    """
    if not scenario.layout.is_distinct:
        raise LayoutMismatchError("closed form requires a layout with no overlap block")
    x, _ = scenario.joint_data()
    x_t, _ = fine_tune_subset(scenario, n_t)
    p = projector(x).matrix
    p_t = projector(x_t).matrix
    parts = decompose_w_star(scenario)
    return p @ parts.w_r + (p - p_t) @ parts.w_f
