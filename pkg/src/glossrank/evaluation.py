"""Dataset loading, retrieval metrics, significance tests, and reports.

Dataset file: UTF-8 TSV, one instance per line:

    id<TAB>target<TAB>context<TAB>img1<TAB>...<TAB>imgK

Gold file: one image key per line, aligned with the data file.

Reports are structured documents (report_version 1) that round-trip
losslessly through JSON, plus an aligned text table for humans. Metric
percentages keep full precision internally; tables render 2 decimals.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from scipy import stats as scipy_stats

from .errors import (
    EmptyResults,
    GoldLengthMismatch,
    GoldNotAmongCandidates,
    InstanceSetMismatch,
    LengthMismatch,
    MalformedLine,
    MissingGold,
)
from .inventory import AmbiguityKind, Pos, SenseInventory
from .scoring import RankResult

REPORT_VERSION = 1

# Ambiguity-level buckets for the corrected/incorrected flip analysis:
# integer sense counts 2..10, then everything above 10, then a total row.
FLIP_BUCKETS: tuple[str, ...] = tuple(str(d) for d in range(2, 11)) + (">10", "total")


@dataclass(frozen=True)
class VwsdInstance:
    """One task example: target word, disambiguating context, candidate images."""

    id: str
    target: str
    context: str
    candidates: tuple[str, ...]
    gold: str | None = None
    pos: Pos | None = None

    def __post_init__(self):
        if not self.candidates:
            raise MalformedLine(f"instance {self.id!r} has no candidates")
        if len(set(self.candidates)) != len(self.candidates):
            raise MalformedLine(f"instance {self.id!r} has duplicate candidates")
        if self.gold is not None and self.gold not in self.candidates:
            raise GoldNotAmongCandidates(
                f"instance {self.id!r}: gold {self.gold!r} not among candidates"
            )


def load_dataset(
    data_path: str | Path, gold_path: str | Path | None = None
) -> list[VwsdInstance]:
    """Load instances in file order; gold labels attach by line alignment."""
    rows: list[tuple[str, str, str, tuple[str, ...]]] = []
    with open(data_path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) < 4:
                raise MalformedLine(
                    f"{data_path}:{lineno}: expected id, target, context and at "
                    f"least one candidate, got {len(fields)} fields"
                )
            inst_id, target, context = fields[0], fields[1], fields[2]
            if not inst_id or not target or not context:
                raise MalformedLine(f"{data_path}:{lineno}: empty id/target/context")
            rows.append((inst_id, target, context, tuple(fields[3:])))

    golds: list[str | None]
    if gold_path is None:
        golds = [None] * len(rows)
    else:
        with open(gold_path, encoding="utf-8") as fh:
            golds = [line.strip() for line in fh if line.strip()]
        if len(golds) != len(rows):
            raise GoldLengthMismatch(
                f"{gold_path}: {len(golds)} gold lines for {len(rows)} instances"
            )

    instances = []
    for (inst_id, target, context, candidates), gold in zip(rows, golds):
        instances.append(VwsdInstance(inst_id, target, context, candidates, gold))
    return instances


# --- metrics -----------------------------------------------------------------


def _gold_ranks(results: Sequence[RankResult]) -> list[int]:
    if not results:
        raise EmptyResults("no results to score")
    ranks = []
    for r in results:
        if r.gold_rank is None:
            raise MissingGold(f"result {r.instance_id!r} has no gold rank")
        ranks.append(r.gold_rank)
    return ranks


def hits_at_1(results: Sequence[RankResult]) -> float:
    """Percentage of instances whose gold image is ranked first."""
    ranks = _gold_ranks(results)
    return 100.0 * sum(1 for r in ranks if r == 1) / len(ranks)


def mrr(results: Sequence[RankResult]) -> float:
    """Mean reciprocal rank of the gold image, as a percentage."""
    ranks = _gold_ranks(results)
    return 100.0 * sum(1.0 / r for r in ranks) / len(ranks)


@dataclass(frozen=True)
class TTestResult:
    t_stat: float
    df: int
    p_value: float
    zero_variance: bool = False


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    """Two-sided paired t-test on per-instance correctness differences.

    df = n - 1; p comes from the Student's t CDF. When every difference is
    zero the statistic is undefined: reported as no difference (t=0, p=1)
    with the zero_variance flag set.
    """
    if len(a) != len(b):
        raise LengthMismatch(f"paired vectors of length {len(a)} and {len(b)}")
    n = len(a)
    if n < 2:
        raise LengthMismatch("paired t-test needs at least 2 observations")
    diffs = [float(x) - float(y) for x, y in zip(a, b)]
    mean = sum(diffs) / n
    var = sum((d - mean) ** 2 for d in diffs) / (n - 1)
    df = n - 1
    if var == 0.0:
        return TTestResult(t_stat=0.0, df=df, p_value=1.0, zero_variance=True)
    t = mean / math.sqrt(var / n)
    p = 2.0 * float(scipy_stats.t.sf(abs(t), df))
    return TTestResult(t_stat=t, df=df, p_value=p)


# --- per-instance records and reports ----------------------------------------


@dataclass(frozen=True)
class InstanceRecord:
    """What the report keeps per instance."""

    id: str
    gold_rank: int
    correct: bool
    num_defs: int
    mode: str  # scoring pathway actually used (baseline fallback shows here)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "gold_rank": self.gold_rank,
            "correct": self.correct,
            "num_defs": self.num_defs,
            "mode": self.mode,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InstanceRecord":
        return cls(d["id"], d["gold_rank"], d["correct"], d["num_defs"], d["mode"])


@dataclass(frozen=True)
class ClassSlice:
    n: int
    hits_at_1: float
    mrr: float

    def to_dict(self) -> dict:
        return {"n": self.n, "hits_at_1": self.hits_at_1, "mrr": self.mrr}


@dataclass
class EvalReport:
    """Aggregated evaluation of one configuration over a dataset."""

    n: int
    hits_at_1: float
    mrr: float
    fallback_count: int
    per_class: dict[str, ClassSlice]
    records: list[InstanceRecord]
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "report_version": REPORT_VERSION,
            "config": self.config,
            "n": self.n,
            "hits_at_1": self.hits_at_1,
            "mrr": self.mrr,
            "fallback_count": self.fallback_count,
            "per_class": {k: v.to_dict() for k, v in self.per_class.items()},
            "instances": [r.to_dict() for r in self.records],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        if d.get("report_version") != REPORT_VERSION:
            raise MalformedLine(f"unsupported report version {d.get('report_version')!r}")
        return cls(
            n=d["n"],
            hits_at_1=d["hits_at_1"],
            mrr=d["mrr"],
            fallback_count=d["fallback_count"],
            per_class={
                k: ClassSlice(v["n"], v["hits_at_1"], v["mrr"])
                for k, v in d["per_class"].items()
            },
            records=[InstanceRecord.from_dict(r) for r in d["instances"]],
            config=d.get("config", {}),
        )


def _ambiguity_kind(num_defs: int) -> str:
    if num_defs == 0:
        return AmbiguityKind.OOV.value
    if num_defs == 1:
        return AmbiguityKind.TRIVIAL.value
    return AmbiguityKind.AMBIGUOUS.value


def build_report(
    results: Sequence[RankResult],
    num_defs: dict[str, int],
    modes: dict[str, str],
    fallback_count: int = 0,
    config: dict | None = None,
) -> EvalReport:
    """Assemble an EvalReport from ranked results and per-instance metadata."""
    if not results:
        raise EmptyResults("cannot build a report from zero results")
    results = sorted(results, key=lambda r: r.instance_id)
    records = []
    for r in results:
        if r.gold_rank is None:
            raise MissingGold(f"result {r.instance_id!r} has no gold rank")
        records.append(
            InstanceRecord(
                id=r.instance_id,
                gold_rank=r.gold_rank,
                correct=r.gold_rank == 1,
                num_defs=num_defs.get(r.instance_id, 0),
                mode=modes.get(r.instance_id, "?"),
            )
        )
    return EvalReport(
        n=len(results),
        hits_at_1=hits_at_1(results),
        mrr=mrr(results),
        fallback_count=fallback_count,
        per_class=ambiguity_breakdown_from_records(records),
        records=records,
        config=config or {},
    )


def ambiguity_breakdown_from_records(
    records: Sequence[InstanceRecord],
) -> dict[str, ClassSlice]:
    """Slice metrics by ambiguity class (no senses / one sense / several)."""
    slices: dict[str, ClassSlice] = {}
    for kind in (AmbiguityKind.OOV, AmbiguityKind.TRIVIAL, AmbiguityKind.AMBIGUOUS):
        group = [r for r in records if _ambiguity_kind(r.num_defs) == kind.value]
        if not group:
            continue
        n = len(group)
        slices[kind.value] = ClassSlice(
            n=n,
            hits_at_1=100.0 * sum(1 for r in group if r.gold_rank == 1) / n,
            mrr=100.0 * sum(1.0 / r.gold_rank for r in group) / n,
        )
    return slices


def ambiguity_breakdown(
    results: Sequence[RankResult], inventory: SenseInventory, targets: dict[str, str]
) -> dict[str, ClassSlice]:
    """Breakdown straight from results plus an inventory (targets: id -> word)."""
    records = []
    for r in results:
        if r.gold_rank is None:
            raise MissingGold(f"result {r.instance_id!r} has no gold rank")
        count = inventory.ambiguity_class(targets[r.instance_id]).count
        records.append(
            InstanceRecord(r.instance_id, r.gold_rank, r.gold_rank == 1, count, "")
        )
    return ambiguity_breakdown_from_records(records)


# --- flip analysis between two systems ----------------------------------------


@dataclass(frozen=True)
class PairedComparison:
    """Wrong-to-right vs right-to-wrong flips for one ambiguity bucket."""

    bucket: str
    n: int
    corrected: int
    incorrected: int
    corrected_ratio: float | None  # None when 0/0; inf when x/0
    t_stat: float
    df: int
    p_value: float
    zero_variance: bool

    @property
    def ratio_text(self) -> str:
        if self.corrected_ratio is None:
            return "-"
        if math.isinf(self.corrected_ratio):
            return "inf"
        return f"{self.corrected_ratio:.2f}"

    def to_dict(self) -> dict:
        ratio: float | str | None = self.corrected_ratio
        if ratio is not None and math.isinf(ratio):
            ratio = "inf"
        return {
            "bucket": self.bucket,
            "n": self.n,
            "corrected": self.corrected,
            "incorrected": self.incorrected,
            "corrected_ratio": ratio,
            "t_stat": self.t_stat,
            "df": self.df,
            "p_value": self.p_value,
            "zero_variance": self.zero_variance,
        }


def _bucket_of(num_defs: int) -> str | None:
    if num_defs < 2:
        return None
    if num_defs > 10:
        return ">10"
    return str(num_defs)


def corrected_ratio(
    base: EvalReport, new: EvalReport
) -> list[PairedComparison]:
    """Per-ambiguity-bucket flip counts between a base and a new system.

    corrected = base wrong, new right; incorrected = base right, new wrong.
    Covers ambiguous targets only (2 or more senses), bucketed 2..10 and >10,
    plus a total row over all ambiguous targets.
    """
    base_by_id = {r.id: r for r in base.records}
    new_by_id = {r.id: r for r in new.records}
    if set(base_by_id) != set(new_by_id):
        raise InstanceSetMismatch("base and new reports cover different instances")

    groups: dict[str, list[tuple[InstanceRecord, InstanceRecord]]] = {
        b: [] for b in FLIP_BUCKETS
    }
    for inst_id in sorted(base_by_id):
        b_rec, n_rec = base_by_id[inst_id], new_by_id[inst_id]
        bucket = _bucket_of(n_rec.num_defs)
        if bucket is None:
            continue
        groups[bucket].append((b_rec, n_rec))
        groups["total"].append((b_rec, n_rec))

    out = []
    for bucket in FLIP_BUCKETS:
        pairs = groups[bucket]
        corrected = sum(1 for b, n in pairs if not b.correct and n.correct)
        incorrected = sum(1 for b, n in pairs if b.correct and not n.correct)
        if incorrected > 0:
            ratio: float | None = round(corrected / incorrected, 2)
        elif corrected > 0:
            ratio = math.inf
        else:
            ratio = None
        if len(pairs) >= 2:
            tt = paired_t_test(
                [1.0 if n.correct else 0.0 for b, n in pairs],
                [1.0 if b.correct else 0.0 for b, n in pairs],
            )
        else:
            tt = TTestResult(0.0, max(len(pairs) - 1, 0), 1.0, zero_variance=True)
        out.append(
            PairedComparison(
                bucket=bucket,
                n=len(pairs),
                corrected=corrected,
                incorrected=incorrected,
                corrected_ratio=ratio,
                t_stat=tt.t_stat,
                df=tt.df,
                p_value=tt.p_value,
                zero_variance=tt.zero_variance,
            )
        )
    return out


def flip_ratio(corrected: int, incorrected: int) -> float:
    """Table-style corrected/incorrected ratio, rounded to 2 decimals."""
    if incorrected == 0:
        return math.inf if corrected > 0 else math.nan
    return round(corrected / incorrected, 2)


@dataclass
class ComparisonReport:
    """Two systems over the same instances: deltas, significance, flips."""

    base: EvalReport
    new: EvalReport
    ttest: TTestResult
    flips: list[PairedComparison]

    @property
    def delta_hits_at_1(self) -> float:
        return self.new.hits_at_1 - self.base.hits_at_1

    @property
    def delta_mrr(self) -> float:
        return self.new.mrr - self.base.mrr

    def to_dict(self) -> dict:
        return {
            "report_version": REPORT_VERSION,
            "base": self.base.to_dict(),
            "new": self.new.to_dict(),
            "delta_hits_at_1": self.delta_hits_at_1,
            "delta_mrr": self.delta_mrr,
            "t_stat": self.ttest.t_stat,
            "df": self.ttest.df,
            "p_value": self.ttest.p_value,
            "zero_variance": self.ttest.zero_variance,
            "flips": [f.to_dict() for f in self.flips],
        }


def compare_reports(base: EvalReport, new: EvalReport) -> ComparisonReport:
    base_by_id = {r.id: r for r in base.records}
    new_by_id = {r.id: r for r in new.records}
    if set(base_by_id) != set(new_by_id):
        raise InstanceSetMismatch("reports cover different instances")
    ids = sorted(base_by_id)
    if len(ids) < 2:
        ttest = TTestResult(0.0, max(len(ids) - 1, 0), 1.0, zero_variance=True)
    else:
        ttest = paired_t_test(
            [1.0 if new_by_id[i].correct else 0.0 for i in ids],
            [1.0 if base_by_id[i].correct else 0.0 for i in ids],
        )
    return ComparisonReport(base, new, ttest, corrected_ratio(base, new))


# --- emission ----------------------------------------------------------------


def emit_report(
    report: EvalReport | ComparisonReport, path: str | Path, fmt: str = "json"
) -> None:
    """Write a report as JSON (lossless) or as an aligned text table."""
    if fmt == "json":
        text = json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n"
    elif fmt == "text":
        text = format_report(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def load_report(path: str | Path) -> EvalReport:
    with open(path, encoding="utf-8") as fh:
        return EvalReport.from_dict(json.load(fh))


def _summary_lines(report: EvalReport, title: str) -> list[str]:
    lines = [
        f"{title}",
        f"  instances : {report.n}",
        f"  Hits@1    : {report.hits_at_1:.2f}",
        f"  MRR       : {report.mrr:.2f}",
        f"  fallbacks : {report.fallback_count}",
    ]
    if report.per_class:
        lines.append(f"  {'class':<10} {'n':>6} {'Hits@1':>8} {'MRR':>8}")
        for kind, sl in report.per_class.items():
            lines.append(
                f"  {kind:<10} {sl.n:>6} {sl.hits_at_1:>8.2f} {sl.mrr:>8.2f}"
            )
    return lines


def format_report(report: EvalReport | ComparisonReport) -> str:
    """Aligned text rendering (2-decimal percentages)."""
    if isinstance(report, EvalReport):
        return "\n".join(_summary_lines(report, "evaluation")) + "\n"
    lines = _summary_lines(report.base, "base system")
    lines += _summary_lines(report.new, "new system")
    lines += [
        "comparison",
        f"  dHits@1   : {report.delta_hits_at_1:+.2f}",
        f"  dMRR      : {report.delta_mrr:+.2f}",
        f"  t         : {report.ttest.t_stat:.4f} (df={report.ttest.df})",
        f"  p         : {report.ttest.p_value:.4g}"
        + ("  [zero variance]" if report.ttest.zero_variance else ""),
        f"  {'senses':<8} {'n':>6} {'corrected':>10} {'incorrected':>12} {'ratio':>7}",
    ]
    for flip in report.flips:
        lines.append(
            f"  {flip.bucket:<8} {flip.n:>6} {flip.corrected:>10} "
            f"{flip.incorrected:>12} {flip.ratio_text:>7}"
        )
    return "\n".join(lines) + "\n"
