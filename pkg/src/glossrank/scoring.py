"""Probability math for gloss-enhanced image ranking.

Three prediction pathways over a set of candidate images:

* baseline   — softmax over inner products of image vectors with the raw
               context vector (no definitions).
* marginal   — the posterior over images is the sum over sense definitions of
               P(image | definition) * P(definition | context): a C2D
               distribution over definitions weighting one D2I distribution
               per definition.
* pipeline   — hard-select the argmax definition from C2D, then rank images
               by that definition's D2I row alone.

Definition texts enter through the joint template ``{context} : {definition}``;
the joint-text vector serves both C2D (against the context vector) and D2I
(against the image vectors).

All operations are pure and safe to call concurrently. Ties are always broken
by original candidate order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyCandidates,
    EmptyDefinitions,
    EmptyField,
    EmptyInput,
    GoldNotInSupport,
    NonFiniteInput,
    NormOutOfTolerance,
    ShapeMismatch,
    SupportMismatch,
)

NORM_TOL = 1e-6
SUM_TOL = 1e-9


class Kind(str, Enum):
    TEXT = "T"
    IMAGE = "I"


class ScoringMode(str, Enum):
    BASELINE = "baseline"
    MARGINAL = "marginal"
    PIPELINE = "pipeline"


@dataclass(frozen=True)
class Representation:
    """Unit-norm vector for a text key or image key."""

    key: str
    kind: Kind
    vec: np.ndarray

    def __post_init__(self):
        vec = np.asarray(self.vec, dtype=np.float64)
        object.__setattr__(self, "vec", vec)
        if vec.ndim != 1 or vec.size == 0:
            raise EmptyInput(f"representation {self.key!r} has no vector")
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > NORM_TOL:
            raise NormOutOfTolerance(
                f"representation {self.key!r} has norm {norm!r}, expected 1"
            )

    @property
    def dim(self) -> int:
        return int(self.vec.shape[0])


@dataclass(frozen=True)
class Distribution:
    """Probability vector over an ordered support (definitions or candidates)."""

    probs: np.ndarray
    support: tuple

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "support", tuple(self.support))
        if probs.ndim != 1 or probs.size == 0:
            raise EmptyInput("distribution has no entries")
        if len(self.support) != probs.size:
            raise ShapeMismatch(
                f"{probs.size} probabilities for {len(self.support)} labels"
            )
        if np.any(probs < 0):
            raise NonFiniteInput("distribution has negative entries")
        total = float(probs.sum())
        if abs(total - 1.0) > SUM_TOL:
            raise NonFiniteInput(f"distribution sums to {total!r}, expected 1")

    def __len__(self) -> int:
        return int(self.probs.size)

    def argmax(self) -> int:
        """Index of the highest probability; ties go to the lowest index."""
        return int(np.argmax(self.probs))


@dataclass(frozen=True)
class ScoreConfig:
    """Softmax temperatures for the two pathways.

    c2d_scale / d2i_scale default to logit_scale; exporters of real encoder
    embeddings record the model's learned scale in the store header, and the
    engine feeds it through here rather than hard-coding a model constant.
    """

    logit_scale: float = 1.0
    mode: ScoringMode = ScoringMode.MARGINAL
    c2d_scale: float | None = None
    d2i_scale: float | None = None

    def __post_init__(self):
        if self.logit_scale <= 0:
            raise ValueError(f"logit_scale must be positive, got {self.logit_scale}")
        for name in ("c2d_scale", "d2i_scale"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive, got {v}")

    @property
    def scale_c2d(self) -> float:
        return self.logit_scale if self.c2d_scale is None else self.c2d_scale

    @property
    def scale_d2i(self) -> float:
        return self.logit_scale if self.d2i_scale is None else self.d2i_scale


@dataclass(frozen=True)
class RankResult:
    """Ranking of one instance's candidates by posterior probability."""

    instance_id: str
    posterior: Distribution
    ranking: tuple[str, ...]
    prediction: str
    c2d: Distribution | None = None
    gold_rank: int | None = None
    definitions: tuple = ()


def _softmax(scores: Sequence[float] | np.ndarray, scale: float) -> np.ndarray:
    """Numerically stable softmax kernel: exp(scale * (s - max(s))) normalized."""
    s = np.asarray(scores, dtype=np.float64)
    if s.size == 0:
        raise EmptyInput("softmax of empty score vector")
    if not np.all(np.isfinite(s)):
        raise NonFiniteInput("softmax scores must be finite")
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    z = np.exp(scale * (s - s.max()))
    return z / z.sum()


def softmax(scores: Sequence[float] | np.ndarray, scale: float = 1.0) -> Distribution:
    """Softmax a score vector into a Distribution over score indices."""
    probs = _softmax(scores, scale)
    return Distribution(probs, tuple(range(probs.size)))


def build_joint_text(context: str, definition: str) -> str:
    """Join a context and one sense definition with the ``ctx : def`` template.

    Both fields pass through verbatim; only the separator is added.
    """
    if not context:
        raise EmptyField("context must be non-empty")
    if not definition:
        raise EmptyField("definition must be non-empty")
    return f"{context} : {definition}"


def _check_dims(anchor: Representation, others: Sequence[Representation]) -> None:
    for rep in others:
        if rep.dim != anchor.dim:
            raise DimensionMismatch(
                f"{rep.key!r} has dim {rep.dim}, expected {anchor.dim}"
            )


def c2d(
    context_rep: Representation,
    def_reps: Sequence[Representation],
    cfg: ScoreConfig = ScoreConfig(),
) -> Distribution:
    """Distribution over sense definitions given the context.

    Scores are inner products of the definition (joint-text) vectors with the
    context vector; support labels are definition indices.
    """
    if len(def_reps) == 0:
        raise EmptyDefinitions("c2d needs at least one definition representation")
    _check_dims(context_rep, def_reps)
    scores = np.array([float(r.vec @ context_rep.vec) for r in def_reps])
    return Distribution(_softmax(scores, cfg.scale_c2d), tuple(range(len(def_reps))))


def d2i(
    joint_rep: Representation,
    image_reps: Sequence[Representation],
    cfg: ScoreConfig = ScoreConfig(),
) -> Distribution:
    """Distribution over candidate images given one definition's joint text."""
    if len(image_reps) == 0:
        raise EmptyCandidates("d2i needs at least one candidate image")
    _check_dims(joint_rep, image_reps)
    scores = np.array([float(r.vec @ joint_rep.vec) for r in image_reps])
    return Distribution(
        _softmax(scores, cfg.scale_d2i), tuple(r.key for r in image_reps)
    )


def scores_to_distribution(
    scores: Sequence[float], support: Sequence[str], scale: float = 1.0
) -> Distribution:
    """Softmax precomputed pairwise scores (cross-encoder path) into a Distribution."""
    return Distribution(_softmax(np.asarray(scores), scale), tuple(support))


def baseline_posterior(
    context_rep: Representation,
    image_reps: Sequence[Representation],
    cfg: ScoreConfig = ScoreConfig(),
) -> Distribution:
    """No-gloss pathway: softmax over image-context inner products."""
    if len(image_reps) == 0:
        raise EmptyCandidates("baseline needs at least one candidate image")
    _check_dims(context_rep, image_reps)
    scores = np.array([float(r.vec @ context_rep.vec) for r in image_reps])
    return Distribution(
        _softmax(scores, cfg.scale_d2i), tuple(r.key for r in image_reps)
    )


def _check_rows(c2d_dist: Distribution, d2i_rows: Sequence[Distribution]) -> tuple:
    if len(d2i_rows) != len(c2d_dist):
        raise ShapeMismatch(
            f"{len(d2i_rows)} image distributions for {len(c2d_dist)} definitions"
        )
    support = d2i_rows[0].support
    for row in d2i_rows[1:]:
        if row.support != support:
            raise SupportMismatch("image distributions do not share a support")
    return support


def marginal_posterior(
    c2d_dist: Distribution, d2i_rows: Sequence[Distribution]
) -> Distribution:
    """Posterior over images marginalized over sense definitions.

    posterior[v] = sum_i d2i_rows[i][v] * c2d[i]; sums to 1 by construction.
    """
    support = _check_rows(c2d_dist, d2i_rows)
    matrix = np.stack([row.probs for row in d2i_rows])
    return Distribution(c2d_dist.probs @ matrix, support)


def pipeline_posterior(
    c2d_dist: Distribution, d2i_rows: Sequence[Distribution]
) -> Distribution:
    """Hard-assignment pathway: the D2I row of the argmax definition.

    c2d may be a one-hot distribution from an external sense predictor.
    """
    support = _check_rows(c2d_dist, d2i_rows)
    del support
    return d2i_rows[c2d_dist.argmax()]


def rank(
    posterior: Distribution,
    gold: str | None = None,
    instance_id: str = "",
    c2d_dist: Distribution | None = None,
    definitions: Sequence = (),
) -> RankResult:
    """Sort candidates by descending posterior; stable on ties.

    gold_rank is the 1-based position of the gold candidate under the same
    tie rule.
    """
    order = np.argsort(-posterior.probs, kind="stable")
    ranking = tuple(posterior.support[i] for i in order)
    gold_rank = None
    if gold is not None:
        if gold not in posterior.support:
            raise GoldNotInSupport(f"gold {gold!r} not among candidates")
        gold_rank = ranking.index(gold) + 1
    return RankResult(
        instance_id=instance_id,
        posterior=posterior,
        ranking=ranking,
        prediction=ranking[0],
        c2d=c2d_dist,
        gold_rank=gold_rank,
        definitions=tuple(definitions),
    )
