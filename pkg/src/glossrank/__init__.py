"""glossrank: rank candidate images for ambiguous words using sense definitions.

The posterior over candidate images is either computed directly from
context-image similarity (baseline), marginalized over the target word's
sense definitions, or taken from the argmax sense alone (pipeline).
"""

from .defgen import (
    DefinitionCache,
    DefinitionSourceMode,
    GenRecord,
    GenRequest,
    HttpGenerationClient,
    ReplayClient,
    assemble_definitions,
    build_cadg_prompt,
    build_dg_prompt,
    generate,
)
from .engine import Ranker, RankOutcome, rank_dataset
from .errors import GlossrankError
from .evaluation import (
    ComparisonReport,
    EvalReport,
    PairedComparison,
    VwsdInstance,
    ambiguity_breakdown,
    build_report,
    compare_reports,
    corrected_ratio,
    emit_report,
    hits_at_1,
    load_dataset,
    load_report,
    mrr,
    paired_t_test,
)
from .inventory import (
    AmbiguityClass,
    AmbiguityKind,
    Pos,
    SenseEntry,
    SenseInventory,
    Source,
    load_inventory,
    save_inventory,
)
from .providers import (
    EmbeddingStore,
    PairScoreTable,
    SyntheticEncoder,
    open_pairs,
    open_store,
    pair_score,
    synth_encode,
    write_store,
)
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
    softmax,
)

__version__ = "0.1.0"
