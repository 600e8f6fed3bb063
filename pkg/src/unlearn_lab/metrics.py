"""Loss measurement, oracle gap reporting, and classifier accuracy metrics.

Two metric families are kept strictly separate: mean-squared losses for
the linear pipeline (:class:`LossReport`) and 0/1 accuracy fractions for
the classifier pipeline (:class:`Metrics`).  Accuracies are reported as
fractions in [0, 1]; rendering as percentages is a display concern.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import ProvenanceMismatchError
from .linalg import as_matrix, as_vector
from .oracle import PRED_ABS_FLOOR, PRED_REL_TOL, TheoremPrediction
from .scenarios import SyntheticScenario

if TYPE_CHECKING:
    from .classifier import LabeledSet, SoftmaxClassifier

MODEL_TAGS = ("original", "fine_tuned", "golden", "edited_fine_tuned")


@dataclass(frozen=True)
class LossReport:
    """Measured remaining/unlearning losses for one model of the pipeline."""

    rl: float
    ul: float
    model_tag: str

    def __post_init__(self):
        if self.model_tag not in MODEL_TAGS:
            raise ValueError(f"unknown model tag {self.model_tag!r}")
        if not (np.isfinite(self.rl) and np.isfinite(self.ul)):
            raise ValueError("losses must be finite")
        if self.rl < 0 or self.ul < 0:
            raise ValueError("losses must be nonnegative")


@dataclass(frozen=True)
class Metrics:
    """Classifier unlearning metrics: UA, RA, TA as fractions in [0, 1]."""

    ua: float
    ra: float
    ta: float
    runtime_seconds: float

    def __post_init__(self):
        for name in ("ua", "ra", "ta"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")


def mse_loss(w, x, y) -> float:
    """Mean-squared loss ``(1/m) ||X^T w - y||^2`` over ``m`` samples."""
    weights = as_vector(w, "w")
    data = as_matrix(x, "x")
    targets = as_vector(y, "y")
    if data.shape[0] != weights.shape[0] or data.shape[1] != targets.shape[0]:
        raise ValueError(
            f"shape mismatch: x {data.shape}, w {weights.shape}, y {targets.shape}"
        )
    if targets.shape[0] < 1:
        raise ValueError("need at least one sample")
    residual = data.T @ weights - targets
    return float(residual @ residual) / targets.shape[0]


def measure_losses(w, scenario: SyntheticScenario, model_tag: str) -> LossReport:
    """Remaining and unlearning loss of ``w`` on a scenario's two subsets."""
    return LossReport(
        rl=mse_loss(w, scenario.x_r, scenario.y_r),
        ul=mse_loss(w, scenario.x_f, scenario.y_f),
        model_tag=model_tag,
    )


@dataclass(frozen=True)
class GapEntry:
    """One measured-versus-predicted comparison."""

    name: str
    measured: float
    predicted: float
    abs_gap: float
    rel_gap: float
    ok: bool


@dataclass(frozen=True)
class GapReport:
    """Structured diff between a loss report and an oracle prediction."""

    entries: tuple[GapEntry, ...]
    passed: bool


def _gap_entry(name, measured, predicted, rel_tol, abs_floor) -> GapEntry:
    abs_gap = abs(measured - predicted)
    rel_gap = abs_gap / abs(predicted) if predicted != 0.0 else (0.0 if abs_gap == 0.0 else np.inf)
    ok = abs_gap <= max(abs_floor, rel_tol * abs(predicted))
    return GapEntry(name, measured, predicted, abs_gap, rel_gap, ok)


def gap_report(
    measured: LossReport,
    predicted: TheoremPrediction,
    rel_tol: float = PRED_REL_TOL,
    abs_floor: float = PRED_ABS_FLOOR,
) -> GapReport:
    """Compare measured losses against the prediction for the same model.

    The model tag selects which predicted pair applies; a tag with no
    predicted counterpart ("original", or an edited tag against a
    prediction lacking edit values) raises
    :class:`ProvenanceMismatchError`.  Each entry passes when its absolute
    gap is at most ``max(abs_floor, rel_tol * |predicted|)``.
    """
    if measured.model_tag == "fine_tuned":
        pairs = [("rl", measured.rl, predicted.rl_ft), ("ul", measured.ul, predicted.ul_ft)]
    elif measured.model_tag == "golden":
        pairs = [("rl", measured.rl, predicted.rl_gold), ("ul", measured.ul, predicted.ul_gold)]
    elif measured.model_tag == "edited_fine_tuned":
        if predicted.rl_edit is None or predicted.ul_edit is None:
            raise ProvenanceMismatchError(
                f"prediction of kind {predicted.kind!r} carries no edited-model losses"
            )
        pairs = [("rl", measured.rl, predicted.rl_edit), ("ul", measured.ul, predicted.ul_edit)]
    else:
        raise ProvenanceMismatchError(
            f"no predicted losses exist for model tag {measured.model_tag!r}"
        )
    entries = tuple(_gap_entry(n, m, p, rel_tol, abs_floor) for n, m, p in pairs)
    return GapReport(entries=entries, passed=all(e.ok for e in entries))


def accuracy(model: SoftmaxClassifier, data: LabeledSet) -> float:
    """Fraction of samples whose highest logit matches the label.

    Ties are broken toward the lowest class index, and adding a common
    constant to every logit leaves the result unchanged.
    """
    if data.size == 0:
        raise ValueError("accuracy of an empty set is undefined")
    predicted = np.argmax(model.logits(data.features), axis=0)
    return float(np.mean(predicted == data.labels))


def classifier_metrics(
    model: SoftmaxClassifier,
    forget_set: LabeledSet,
    remain_set: LabeledSet,
    test_set: LabeledSet,
    runtime_seconds: float = 0.0,
) -> Metrics:
    """UA/RA/TA of a classifier: ``UA = 1 - accuracy`` on the forget set."""
    return Metrics(
        ua=1.0 - accuracy(model, forget_set),
        ra=accuracy(model, remain_set),
        ta=accuracy(model, test_set),
        runtime_seconds=runtime_seconds,
    )
