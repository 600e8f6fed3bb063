"""Synthetic interpolating-regression scenarios with block feature structure.

A scenario partitions the ``d`` feature coordinates into three contiguous
blocks: remaining-only, overlapping, and forgetting-only.  The remaining
data matrix is nonzero only on the first two blocks, the forgetting data
matrix only on the last two, and labels are generated noiselessly from a
dense ground-truth weight vector.  With an empty overlap block the two
sample sets touch disjoint coordinates.

Generation is reproducible: each block (remaining features, the two
overlap slabs, forgetting features, ground-truth weights) is drawn from
its own named random stream, so block shapes and generation order never
interact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import InvalidMatrixError, RegimeViolationError

DIST_TAGS = ("standard-normal", "uniform")


@dataclass(frozen=True)
class FeatureLayout:
    """Sizes of the remaining-only / overlapping / forgetting-only blocks."""

    d_r: int
    d_lap: int
    d_f: int

    def __post_init__(self):
        for name in ("d_r", "d_lap", "d_f"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 0:
                raise ValueError(f"{name} must be a nonnegative integer, got {value!r}")

    @property
    def d(self) -> int:
        return self.d_r + self.d_lap + self.d_f

    @property
    def is_distinct(self) -> bool:
        """True when there is no overlap block."""
        return self.d_lap == 0

    @property
    def remaining_block(self) -> slice:
        return slice(0, self.d_r)

    @property
    def overlap_block(self) -> slice:
        return slice(self.d_r, self.d_r + self.d_lap)

    @property
    def forgetting_block(self) -> slice:
        return slice(self.d_r + self.d_lap, self.d)


@dataclass(frozen=True)
class SyntheticScenario:
    """Generated data matrices, noiseless labels, and the true weights.

    ``x_r`` is ``d x n_r`` and ``x_f`` is ``d x n_f`` (features by
    samples); ``y_r = x_r^T w_star`` and ``y_f = x_f^T w_star`` hold by
    construction.
    """

    layout: FeatureLayout
    x_r: np.ndarray = field(repr=False)
    x_f: np.ndarray = field(repr=False)
    y_r: np.ndarray = field(repr=False)
    y_f: np.ndarray = field(repr=False)
    w_star: np.ndarray = field(repr=False)
    seed: int
    dist: str = "standard-normal"

    @property
    def d(self) -> int:
        return self.layout.d

    @property
    def n_r(self) -> int:
        return self.x_r.shape[1]

    @property
    def n_f(self) -> int:
        return self.x_f.shape[1]

    @property
    def n(self) -> int:
        return self.n_r + self.n_f

    def joint_data(self) -> tuple[np.ndarray, np.ndarray]:
        """Full training set: remaining columns followed by forgetting columns."""
        return (
            np.hstack([self.x_r, self.x_f]),
            np.concatenate([self.y_r, self.y_f]),
        )


@dataclass(frozen=True)
class WStarDecomposition:
    """Split of the true weights onto the three coordinate blocks.

    Each part is a full-length vector supported on its own block, and the
    three parts sum to ``w_star`` exactly.
    """

    w_r: np.ndarray = field(repr=False)
    w_lap: np.ndarray = field(repr=False)
    w_f: np.ndarray = field(repr=False)


def _draw(seed: int, label: str, shape: tuple[int, ...], dist: str) -> np.ndarray:
    gen = rng.stream(seed, label)
    if dist == "standard-normal":
        return gen.standard_normal(shape)
    if dist == "uniform":
        return gen.uniform(-1.0, 1.0, shape)
    raise ValueError(f"unknown dist tag {dist!r}; expected one of {DIST_TAGS}")


def gen_scenario(
    n_r: int,
    n_f: int,
    layout: FeatureLayout,
    seed: int,
    dist: str = "standard-normal",
) -> SyntheticScenario:
    """Generate a reproducible block-structured scenario.

    Requires ``n_r + n_f <= d`` so that the joint system stays
    interpolable; larger sample counts raise
    :class:`RegimeViolationError`.  Nonzero blocks and the true weight
    vector are i.i.d. draws from ``dist`` (standard normal by default),
    and labels are exact products with no added noise.
    """
    if n_r < 1 or n_f < 1:
        raise ValueError("n_r and n_f must both be >= 1")
    if dist not in DIST_TAGS:
        raise ValueError(f"unknown dist tag {dist!r}; expected one of {DIST_TAGS}")
    d = layout.d
    if n_r + n_f > d:
        raise RegimeViolationError(
            f"n = {n_r + n_f} samples exceed d = {d} features; "
            "the joint system would no longer be interpolable"
        )

    remaining = _draw(seed, "remaining-features", (layout.d_r, n_r), dist)
    lap_r = _draw(seed, "overlap-remaining", (layout.d_lap, n_r), dist)
    lap_f = _draw(seed, "overlap-forgetting", (layout.d_lap, n_f), dist)
    forgetting = _draw(seed, "forgetting-features", (layout.d_f, n_f), dist)
    w_star = _draw(seed, "w-star", (d,), dist)

    x_r = np.zeros((d, n_r))
    x_r[layout.remaining_block] = remaining
    x_r[layout.overlap_block] = lap_r
    x_f = np.zeros((d, n_f))
    x_f[layout.overlap_block] = lap_f
    x_f[layout.forgetting_block] = forgetting

    return SyntheticScenario(
        layout=layout,
        x_r=x_r,
        x_f=x_f,
        y_r=x_r.T @ w_star,
        y_f=x_f.T @ w_star,
        w_star=w_star,
        seed=int(seed),
        dist=dist,
    )


def decompose_w_star(scenario: SyntheticScenario) -> WStarDecomposition:
    """Coordinate-mask split of the true weights by layout block."""
    layout = scenario.layout
    parts = []
    for block in (layout.remaining_block, layout.overlap_block, layout.forgetting_block):
        part = np.zeros(layout.d)
        part[block] = scenario.w_star[block]
        parts.append(part)
    return WStarDecomposition(w_r=parts[0], w_lap=parts[1], w_f=parts[2])


def fine_tune_subset(scenario: SyntheticScenario, n_t: int) -> tuple[np.ndarray, np.ndarray]:
    """First ``n_t`` remaining samples and their labels, in order."""
    if not 1 <= n_t <= scenario.n_r:
        raise ValueError(f"n_t must be in [1, {scenario.n_r}], got {n_t}")
    return scenario.x_r[:, :n_t], scenario.y_r[:n_t]


def scenario_to_json(scenario: SyntheticScenario) -> str:
    """Serialize a scenario as a JSON document (exact float round trip)."""
    payload = {
        "layout": [scenario.layout.d_r, scenario.layout.d_lap, scenario.layout.d_f],
        "seed": scenario.seed,
        "dist": scenario.dist,
        "x_r": scenario.x_r.tolist(),
        "x_f": scenario.x_f.tolist(),
        "y_r": scenario.y_r.tolist(),
        "y_f": scenario.y_f.tolist(),
        "w_star": scenario.w_star.tolist(),
    }
    return json.dumps(payload)


def scenario_from_json(text: str) -> SyntheticScenario:
    """Inverse of :func:`scenario_to_json`."""
    payload = json.loads(text)
    layout = FeatureLayout(*(int(v) for v in payload["layout"]))
    scenario = SyntheticScenario(
        layout=layout,
        x_r=np.asarray(payload["x_r"], dtype=np.float64),
        x_f=np.asarray(payload["x_f"], dtype=np.float64),
        y_r=np.asarray(payload["y_r"], dtype=np.float64),
        y_f=np.asarray(payload["y_f"], dtype=np.float64),
        w_star=np.asarray(payload["w_star"], dtype=np.float64),
        seed=int(payload["seed"]),
        dist=str(payload["dist"]),
    )
    if scenario.x_r.shape[0] != layout.d or scenario.x_f.shape[0] != layout.d:
        raise InvalidMatrixError("serialized matrices do not match the layout dimension")
    return scenario
