"""Per-instance ranking: wire providers, definition sources, and scoring.

A Ranker resolves, for each task instance, the context vector, one joint-text
vector per definition, and the candidate image vectors (or precomputed
pairwise scores in cross-encoder runs), then produces a RankResult under the
configured scoring mode. Instances whose definition source comes up empty
fall back to baseline scoring with a logged warning.

Ranking is a pure function of the inputs, so instances can be processed by
any number of workers; the evaluation loop re-orders results by instance id
before aggregating.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .defgen import (
    DefinitionCache,
    DefinitionSourceMode,
    GenerationClient,
    GenRequest,
    assemble_definitions,
    build_cadg_prompt,
    build_dg_prompt,
    generate,
)
from .errors import AuditError, ConfigError, NoDefinitionsAvailable
from .evaluation import VwsdInstance
from .inventory import SenseEntry, SenseInventory
from .providers import PairScoreTable
from .scoring import (
    Distribution,
    Kind,
    RankResult,
    Representation,
    ScoreConfig,
    ScoringMode,
    baseline_posterior,
    build_joint_text,
    c2d,
    d2i,
    marginal_posterior,
    pipeline_posterior,
    rank,
    scores_to_distribution,
)

logger = logging.getLogger(__name__)


class VectorProvider(Protocol):
    """Source of unit-norm representations (embedding store or synthetic encoder)."""

    def get_text(self, key: str) -> Representation: ...
    def get_image(self, key: str) -> Representation: ...
    def has_text(self, key: str) -> bool: ...
    def has_image(self, key: str) -> bool: ...


@dataclass
class RankOutcome:
    """A RankResult plus the metadata the report needs."""

    result: RankResult
    num_defs: int
    mode_used: str
    fell_back: bool


@dataclass
class Ranker:
    """Ranks instances under one definition-source / scoring configuration."""

    vectors: VectorProvider | None
    cfg: ScoreConfig
    mode: DefinitionSourceMode = DefinitionSourceMode.NONE
    inventory: SenseInventory | None = None
    pairs: PairScoreTable | None = None
    cache: DefinitionCache | None = None
    client: GenerationClient | None = None
    n_samples: int = 1
    temperature: float = 1.0
    sense_overrides: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        needs_defs = self.mode is not DefinitionSourceMode.NONE
        if self.cfg.mode is ScoringMode.BASELINE and needs_defs:
            raise ConfigError("baseline scoring requires definition source 'none'")
        if self.cfg.mode is not ScoringMode.BASELINE and not needs_defs:
            # An external sense file only replaces the C2D distribution; the
            # definitions (and their joint texts) must still come from somewhere.
            raise ConfigError(
                f"{self.cfg.mode.value} scoring needs a definition source"
            )
        if needs_defs and self.vectors is None:
            raise ConfigError(
                "definition-aware scoring needs text vectors for C2D; "
                "provide a store or synthetic encoder"
            )
        if self.vectors is None and self.pairs is None:
            raise ConfigError("no representation provider configured")
        if self.mode in (DefinitionSourceMode.WN, DefinitionSourceMode.WN_PLUS_CADG):
            if self.inventory is None:
                raise ConfigError(f"mode {self.mode.value} needs an inventory")
        if self.mode.uses_generation and self.cache is None and self.client is None:
            raise ConfigError(
                f"mode {self.mode.value} needs a definition cache or generation client"
            )

    # -- definition resolution --------------------------------------------

    def _generated_defs(self, instance: VwsdInstance) -> list[str]:
        if self.mode is DefinitionSourceMode.DG:
            prompt = build_dg_prompt(instance.target, instance.pos)
        else:  # CADG and the OOV arm of WN_PLUS_CADG
            prompt = build_cadg_prompt(instance.target, instance.pos, instance.context)
        req = GenRequest(
            prompt=prompt,
            n_samples=self.n_samples,
            temperature=self.temperature,
            target=instance.target,
            context=instance.context,
            pos=instance.pos,
        )
        return generate(self.client, req, self.cache)

    def definitions_for(self, instance: VwsdInstance) -> list[SenseEntry]:
        """Assemble this instance's definition set per the source mode."""
        wn_defs: list[SenseEntry] = []
        if self.inventory is not None and self.mode in (
            DefinitionSourceMode.WN,
            DefinitionSourceMode.WN_PLUS_CADG,
        ):
            wn_defs = self.inventory.lookup(instance.target)
        gen_defs: list[str] = []
        if self.mode in (DefinitionSourceMode.DG, DefinitionSourceMode.CADG) or (
            self.mode is DefinitionSourceMode.WN_PLUS_CADG and not wn_defs
        ):
            gen_defs = self._generated_defs(instance)
        return assemble_definitions(
            self.mode, wn_defs, gen_defs, instance.target, instance.pos
        )

    # -- representation access ---------------------------------------------

    def _image_reps(self, instance: VwsdInstance) -> list[Representation]:
        assert self.vectors is not None
        return [self.vectors.get_image(key) for key in instance.candidates]

    def _pair_row(self, text_key: str, instance: VwsdInstance, scale: float) -> Distribution:
        assert self.pairs is not None
        scores = [self.pairs.get(text_key, img) for img in instance.candidates]
        return scores_to_distribution(scores, instance.candidates, scale)

    def _baseline(self, instance: VwsdInstance) -> Distribution:
        if self.pairs is not None:
            return self._pair_row(instance.context, instance, self.cfg.scale_d2i)
        assert self.vectors is not None
        context_rep = self.vectors.get_text(instance.context)
        return baseline_posterior(context_rep, self._image_reps(instance), self.cfg)

    def _d2i_rows(
        self, instance: VwsdInstance, joint_reps: Sequence[Representation]
    ) -> list[Distribution]:
        if self.pairs is not None:
            return [
                self._pair_row(rep.key, instance, self.cfg.scale_d2i)
                for rep in joint_reps
            ]
        images = self._image_reps(instance)
        return [d2i(rep, images, self.cfg) for rep in joint_reps]

    def _one_hot_c2d(self, instance: VwsdInstance, count: int) -> Distribution:
        index = self.sense_overrides[instance.id]
        if not 0 <= index < count:
            raise ConfigError(
                f"instance {instance.id!r}: sense index {index} out of range "
                f"for {count} definitions"
            )
        probs = np.zeros(count)
        probs[index] = 1.0
        return Distribution(probs, tuple(range(count)))

    # -- ranking -------------------------------------------------------------

    def rank_instance(self, instance: VwsdInstance) -> RankOutcome:
        definitions: list[SenseEntry] = []
        fell_back = False
        if self.mode is not DefinitionSourceMode.NONE:
            try:
                definitions = self.definitions_for(instance)
            except NoDefinitionsAvailable:
                logger.warning(
                    "instance %s: no definitions under mode %s; "
                    "falling back to baseline scoring",
                    instance.id,
                    self.mode.value,
                )
                fell_back = True

        if self.cfg.mode is ScoringMode.BASELINE or not definitions:
            posterior = self._baseline(instance)
            result = rank(posterior, instance.gold, instance.id)
            mode_used = ScoringMode.BASELINE.value
            return RankOutcome(result, len(definitions), mode_used, fell_back)

        assert self.vectors is not None
        context_rep = self.vectors.get_text(instance.context)
        joint_reps = [
            self.vectors.get_text(build_joint_text(instance.context, entry.definition))
            for entry in definitions
        ]
        if instance.id in self.sense_overrides:
            c2d_dist = self._one_hot_c2d(instance, len(definitions))
        else:
            c2d_dist = c2d(context_rep, joint_reps, self.cfg)
        rows = self._d2i_rows(instance, joint_reps)
        if self.cfg.mode is ScoringMode.PIPELINE:
            posterior = pipeline_posterior(c2d_dist, rows)
        else:
            posterior = marginal_posterior(c2d_dist, rows)
        result = rank(posterior, instance.gold, instance.id, c2d_dist, definitions)
        return RankOutcome(result, len(definitions), self.cfg.mode.value, fell_back)

    # -- fail-fast audit -------------------------------------------------------

    def required_keys(
        self, instance: VwsdInstance
    ) -> tuple[list[str], list[str], list[tuple[str, str]]]:
        """(text keys, image keys, pair keys) this instance will resolve."""
        texts: list[str] = []
        images: list[str] = []
        pair_keys: list[tuple[str, str]] = []

        definitions: list[SenseEntry] = []
        if self.mode is not DefinitionSourceMode.NONE:
            try:
                definitions = self.definitions_for(instance)
            except NoDefinitionsAvailable:
                definitions = []

        if definitions:
            joints = [
                build_joint_text(instance.context, e.definition) for e in definitions
            ]
            texts = [instance.context, *joints]  # vectors for C2D
            row_keys = joints
        else:
            row_keys = [instance.context]
            if self.pairs is None:
                texts = [instance.context]

        if self.pairs is not None:
            pair_keys = [
                (tkey, img) for tkey in row_keys for img in instance.candidates
            ]
        else:
            images = list(instance.candidates)
        return texts, images, pair_keys

    def audit(self, instances: Sequence[VwsdInstance]) -> None:
        """Collect every missing key across all instances, then fail once."""
        missing: list[str] = []
        seen: set[str] = set()

        def note(item: str) -> None:
            if item not in seen:
                seen.add(item)
                missing.append(item)

        for instance in instances:
            texts, images, pair_keys = self.required_keys(instance)
            if self.vectors is not None:
                for key in texts:
                    if not self.vectors.has_text(key):
                        note(f"TEXT {key!r}")
                for key in images:
                    if not self.vectors.has_image(key):
                        note(f"IMAGE {key!r}")
            if self.pairs is not None:
                for tkey, ikey in pair_keys:
                    if not self.pairs.has(tkey, ikey):
                        note(f"PAIR ({tkey!r}, {ikey!r})")
        if missing:
            raise AuditError(missing)


def rank_dataset(
    ranker: Ranker, instances: Sequence[VwsdInstance], workers: int = 1
) -> list[RankOutcome]:
    """Rank every instance; results come back sorted by instance id."""
    if workers <= 1:
        outcomes = [ranker.rank_instance(inst) for inst in instances]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(ranker.rank_instance, instances))
    return sorted(outcomes, key=lambda o: o.result.instance_id)
