"""Toy multiclass softmax classifier with regularized unlearning objectives.

Class-wise forgetting on Gaussian blobs: pretrain a linear softmax model
on all classes, then fine-tune it on the remaining classes while a
regularizer pushes the forgetting class toward deliberately wrong
labels.  Four full-batch objectives are supported:

- ``naive-ft``:  CE(remain)
- ``kl-ft``:     CE(remain) + alpha * KL(onehot(Y_f') || softmax(X_f))
- ``ce-ft``:     CE(forget, Y_f') + alpha * CE(remain)
- ``ice-ft``:    CE(remain) + alpha * CE(forget, Y_f')

where ``Y_f'`` are the shifted (guaranteed-wrong) labels.  With hard
one-hot targets the KL term equals the cross-entropy on the relabeled
forget set; it is kept as a separate code path because the two loss
families are configured independently.

Training is deterministic: full batch, fixed step size, no randomness
beyond data generation.  Gradients are computed analytically and are
checked against finite differences in the test suite.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import rng
from .errors import DivergenceError
from .metrics import Metrics, classifier_metrics

VARIANTS = ("naive-ft", "kl-ft", "ce-ft", "ice-ft")
RELABEL_SCHEMES = ("shift-by-one",)


@dataclass(frozen=True)
class LabeledSet:
    """Feature matrix (feature_dim x m) with integer class labels."""

    features: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.features.ndim != 2 or self.labels.ndim != 1:
            raise ValueError("features must be 2-D and labels 1-D")
        if self.features.shape[1] != self.labels.shape[0]:
            raise ValueError(
                f"{self.features.shape[1]} feature columns but {self.labels.shape[0]} labels"
            )

    @property
    def size(self) -> int:
        return self.labels.shape[0]


@dataclass(frozen=True)
class SoftmaxClassifier:
    """Linear softmax model: logits are ``W x + b`` per column of ``x``."""

    weights: np.ndarray = field(repr=False)
    bias: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not (np.isfinite(self.weights).all() and np.isfinite(self.bias).all()):
            raise ValueError("model parameters must be finite")

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.weights.shape[1]

    def logits(self, features: np.ndarray) -> np.ndarray:
        return self.weights @ features + self.bias[:, None]


@dataclass(frozen=True)
class FtConfig:
    """Hyperparameters for one fine-tuning run.

    ``alpha`` weighs the regularizer of the kl/ce/ice variants and must
    lie in [0, 1]; it is ignored for ``naive-ft``.  Only full-batch
    deterministic training and the shift-by-one relabeling scheme exist.
    """

    variant: str
    alpha: float = 0.5
    epochs: int = 500
    step_size: float = 0.1
    seed: int = 0
    relabel: str = "shift-by-one"
    batch: str = "full"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.variant != "naive-ft" and not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.relabel not in RELABEL_SCHEMES:
            raise ValueError(f"unknown relabel scheme {self.relabel!r}")
        if self.batch != "full":
            raise ValueError("only full-batch training is supported")


def gen_class_task(
    num_classes: int,
    per_class: int,
    feature_dim: int,
    sep: float,
    seed: int,
) -> tuple[LabeledSet, LabeledSet]:
    """Gaussian class blobs with unit noise and equidistant means.

    Class ``c`` is centred at ``sep * e_c``, so every pair of means is
    ``sep * sqrt(2)`` apart; ``feature_dim >= num_classes`` makes room for
    the basis directions.  Returns an equally sized train and test split,
    each drawn from its own named stream.
    """
    if num_classes < 2:
        raise ValueError("need at least two classes")
    if per_class < 1:
        raise ValueError("per_class must be >= 1")
    if feature_dim < num_classes:
        raise ValueError(
            f"feature_dim ({feature_dim}) must be >= num_classes ({num_classes})"
        )
    if sep <= 0:
        raise ValueError("sep must be positive")

    def draw(split: str) -> LabeledSet:
        gen = rng.stream(seed, f"class-task-{split}")
        features = np.empty((feature_dim, num_classes * per_class))
        labels = np.empty(num_classes * per_class, dtype=np.int64)
        for c in range(num_classes):
            cols = slice(c * per_class, (c + 1) * per_class)
            features[:, cols] = gen.standard_normal((feature_dim, per_class))
            features[c, cols] += sep
            labels[cols] = c
        return LabeledSet(features=features, labels=labels)

    return draw("train"), draw("test")


def split_class(data: LabeledSet, class_id: int) -> tuple[LabeledSet, LabeledSet]:
    """Split into (samples of ``class_id``, everything else)."""
    mask = data.labels == class_id
    return (
        LabeledSet(features=data.features[:, mask], labels=data.labels[mask]),
        LabeledSet(features=data.features[:, ~mask], labels=data.labels[~mask]),
    )


def relabel_forget(labels, num_classes: int, scheme: str = "shift-by-one") -> np.ndarray:
    """Deliberately wrong labels: ``label' = (label + 1) mod num_classes``.

    With at least two classes the shifted label always differs from the
    original.
    """
    if scheme not in RELABEL_SCHEMES:
        raise ValueError(f"unknown relabel scheme {scheme!r}")
    if num_classes < 2:
        raise ValueError("relabeling needs at least two classes")
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise ValueError("labels outside [0, num_classes)")
    return (labels + 1) % num_classes


def softmax_probs(logits: np.ndarray) -> np.ndarray:
    """Column-wise softmax, shift-stabilized."""
    shifted = logits - logits.max(axis=0, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=0, keepdims=True)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=0, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=0, keepdims=True))


def _ce_value_and_grad(weights, bias, data: LabeledSet):
    """Mean cross-entropy against ``data.labels`` and its parameter gradient."""
    m = data.size
    logits = weights @ data.features + bias[:, None]
    log_p = _log_softmax(logits)
    cols = np.arange(m)
    loss = float(-log_p[data.labels, cols].mean())
    g_logits = softmax_probs(logits)
    g_logits[data.labels, cols] -= 1.0
    g_logits /= m
    return loss, g_logits @ data.features.T, g_logits.sum(axis=1)


def _kl_value_and_grad(weights, bias, data: LabeledSet):
    """Mean KL(onehot(labels) || softmax) and its parameter gradient.

    Computed from the divergence formula with the 0*log(0) terms dropped;
    for hard one-hot targets the value coincides with the cross-entropy,
    and the gradient with respect to the logits is the same
    ``softmax - onehot`` expression.
    """
    m = data.size
    logits = weights @ data.features + bias[:, None]
    log_p = _log_softmax(logits)
    cols = np.arange(m)
    onehot = np.zeros_like(log_p)
    onehot[data.labels, cols] = 1.0
    # sum_c t_c * (log t_c - log p_c); only the target class contributes.
    divergences = onehot[data.labels, cols] * (
        np.log(onehot[data.labels, cols]) - log_p[data.labels, cols]
    )
    loss = float(divergences.mean())
    g_logits = (softmax_probs(logits) - onehot) / m
    return loss, g_logits @ data.features.T, g_logits.sum(axis=1)


def objective_value_and_grad(
    weights: np.ndarray,
    bias: np.ndarray,
    remain: LabeledSet,
    forget: LabeledSet,
    variant: str,
    alpha: float,
):
    """Loss and gradients of one fine-tuning objective at given parameters.

    ``forget`` must already carry the relabeled targets.  A zero ``alpha``
    skips the regularizer entirely, so the kl/ice objectives then
    reproduce ``naive-ft`` exactly, accumulation order included.
    """
    if variant == "naive-ft":
        return _ce_value_and_grad(weights, bias, remain)
    if variant == "ce-ft":
        main = _ce_value_and_grad(weights, bias, forget)
        reg = _ce_value_and_grad(weights, bias, remain)
    elif variant == "kl-ft":
        main = _ce_value_and_grad(weights, bias, remain)
        reg = _kl_value_and_grad(weights, bias, forget)
    elif variant == "ice-ft":
        main = _ce_value_and_grad(weights, bias, remain)
        reg = _ce_value_and_grad(weights, bias, forget)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    if alpha == 0.0:
        return main
    loss = main[0] + alpha * reg[0]
    return loss, main[1] + alpha * reg[1], main[2] + alpha * reg[2]


def fit_softmax(
    weights: np.ndarray,
    bias: np.ndarray,
    value_and_grad: Callable,
    epochs: int,
    step_size: float,
    max_halvings: int = 5,
) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Full-batch gradient descent engine.

    Runs ``epochs`` deterministic steps from the given parameters and
    returns the final parameters plus the per-epoch loss trace.  A
    non-finite loss restarts the whole run with the step size halved;
    after ``max_halvings`` unsuccessful restarts a
    :class:`DivergenceError` is raised with a step-size hint.
    """
    for attempt in range(max_halvings + 1):
        step = step_size / (2.0 ** attempt)
        w = weights.copy()
        b = bias.copy()
        losses: list[float] = []
        diverged = False
        for _ in range(epochs):
            # Divergence is detected via the loss value; silence the
            # redundant overflow warnings on that path.
            with np.errstate(over="ignore", invalid="ignore"):
                loss, grad_w, grad_b = value_and_grad(w, b)
            if not np.isfinite(loss):
                diverged = True
                break
            losses.append(loss)
            w -= step * grad_w
            b -= step * grad_b
        if not diverged:
            return w, b, losses
    raise DivergenceError(
        f"loss became non-finite even at step size {step:.3e}; "
        "try a smaller step_size"
    )


def pretrain(train: LabeledSet, cfg: FtConfig, num_classes: int | None = None) -> SoftmaxClassifier:
    """Train a softmax classifier from zero-initialized parameters.

    Plain cross-entropy on ``train`` for ``cfg.epochs`` full-batch steps;
    with zero epochs the zero model is returned.  ``num_classes`` defaults
    to ``max(label) + 1`` and must be given explicitly when the training
    split does not contain the highest class.
    """
    if num_classes is None:
        num_classes = int(train.labels.max()) + 1
    w0 = np.zeros((num_classes, train.features.shape[0]))
    b0 = np.zeros(num_classes)
    w, b, _ = fit_softmax(
        w0, b0,
        lambda w_, b_: _ce_value_and_grad(w_, b_, train),
        cfg.epochs, cfg.step_size,
    )
    return SoftmaxClassifier(weights=w, bias=b)


def unlearn_ft(
    model: SoftmaxClassifier,
    remain: LabeledSet,
    forget: LabeledSet,
    cfg: FtConfig,
) -> SoftmaxClassifier:
    """Fine-tune a pretrained classifier with the configured objective.

    Starts from the pretrained parameters; ``forget`` must already hold
    the relabeled targets for the regularized variants.
    """
    w, b, _ = fit_softmax(
        model.weights, model.bias,
        lambda w_, b_: objective_value_and_grad(
            w_, b_, remain, forget, cfg.variant, cfg.alpha
        ),
        cfg.epochs, cfg.step_size,
    )
    return SoftmaxClassifier(weights=w, bias=b)


@dataclass(frozen=True)
class ClassTask:
    """Parameters of one class-wise forgetting task on Gaussian blobs."""

    num_classes: int = 5
    per_class: int = 100
    feature_dim: int = 20
    sep: float = 4.0
    forget_class: int = 0


@dataclass(frozen=True)
class SweepRow:
    """Metrics of a single (variant, alpha, seed) unlearning run."""

    variant: str
    alpha: float
    seed: int
    metrics: Metrics


def run_unlearning_trial(
    task: ClassTask,
    variant: str,
    alpha: float,
    seed: int,
    cfg: FtConfig | None = None,
) -> Metrics:
    """Full class-wise forgetting pipeline for one seed.

    Generates the task, pretrains on all classes, splits off the
    forgetting class, relabels it, runs the requested unlearning variant
    (or retrains from scratch for ``"retrain"``), and scores UA/RA/TA.
    TA is measured on held-out samples of the remaining classes.  The
    reported runtime covers only the unlearning (or retraining) call.
    """
    if cfg is None:
        cfg = FtConfig(variant=variant if variant in VARIANTS else "naive-ft")
    train, test = gen_class_task(
        task.num_classes, task.per_class, task.feature_dim, task.sep, seed
    )
    forget, remain = split_class(train, task.forget_class)
    _, test_remain = split_class(test, task.forget_class)

    base_cfg = replace(cfg, seed=seed)
    model = pretrain(train, base_cfg, num_classes=task.num_classes)

    if variant == "retrain":
        start = time.perf_counter()
        final = pretrain(remain, base_cfg, num_classes=task.num_classes)
        runtime = time.perf_counter() - start
    elif variant in VARIANTS:
        run_cfg = replace(base_cfg, variant=variant, alpha=alpha)
        relabeled = LabeledSet(
            features=forget.features,
            labels=relabel_forget(forget.labels, task.num_classes, run_cfg.relabel),
        )
        start = time.perf_counter()
        final = unlearn_ft(model, remain, relabeled, run_cfg)
        runtime = time.perf_counter() - start
    else:
        raise ValueError(f"unknown variant {variant!r}")

    return classifier_metrics(final, forget, remain, test_remain, runtime_seconds=runtime)


def alpha_sweep(
    task: ClassTask,
    variant: str,
    alphas: list[float],
    seeds: list[int],
    cfg: FtConfig | None = None,
) -> list[SweepRow]:
    """Run the unlearning pipeline for every (alpha, seed) pair."""
    if not alphas or not seeds:
        raise ValueError("alphas and seeds must both be non-empty")
    rows = []
    for alpha in alphas:
        for seed in seeds:
            metrics = run_unlearning_trial(task, variant, alpha, seed, cfg)
            rows.append(SweepRow(variant=variant, alpha=alpha, seed=seed, metrics=metrics))
    return rows


@dataclass(frozen=True)
class AggregateRow:
    """Mean or population-std summary of one (variant, alpha) cell."""

    variant: str
    alpha: float
    stat: str
    ua: float
    ra: float
    ta: float
    runtime_seconds: float


def aggregate_rows(rows: list[SweepRow]) -> list[AggregateRow]:
    """Mean and std rows per (variant, alpha), in first-seen order."""
    cells: dict[tuple[str, float], list[Metrics]] = {}
    for row in rows:
        cells.setdefault((row.variant, row.alpha), []).append(row.metrics)
    out = []
    for (variant, alpha), group in cells.items():
        values = np.array([[m.ua, m.ra, m.ta, m.runtime_seconds] for m in group])
        for stat, vec in (("mean", values.mean(axis=0)), ("std", values.std(axis=0))):
            out.append(
                AggregateRow(
                    variant=variant, alpha=alpha, stat=stat,
                    ua=float(vec[0]), ra=float(vec[1]),
                    ta=float(vec[2]), runtime_seconds=float(vec[3]),
                )
            )
    return out
