"""Command-line entry point.

Subcommands:

* rank      — rank one instance given on the command line.
* evaluate  — run a dataset under one configuration, write a report;
              --compare re-runs under a second configuration (JSON file)
              and adds significance and flip-analysis sections.
* gendefs   — build generation prompts for a dataset, populate the
              definition cache, and emit a definitions TSV.
* inspect   — print store/inventory/dataset diagnostics, including the
              out-of-vocabulary rate and a missing-key audit.

Definition-source modes mirror the experiment matrix: none, wn, dg, cadg,
wn+cadg. Scoring modes: baseline, marginal, pipeline.

All randomness derives from the synthetic-encoder seed, so identical
invocations produce byte-identical reports.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from . import defgen, evaluation, providers
from .defgen import (
    DefinitionCache,
    DefinitionSourceMode,
    GenRequest,
    HttpGenerationClient,
    ReplayClient,
)
from .engine import Ranker, rank_dataset
from .errors import ConfigError, GlossrankError, MissingGold
from .evaluation import VwsdInstance, build_report, compare_reports, emit_report
from .inventory import SenseInventory, load_inventory
from .providers import SyntheticEncoder, open_pairs, open_store
from .scoring import ScoreConfig, ScoringMode

logger = logging.getLogger(__name__)


@dataclass
class RunConfig:
    """Everything one ranking/evaluation run needs."""

    mode: DefinitionSourceMode = DefinitionSourceMode.NONE
    scoring: ScoringMode = ScoringMode.BASELINE
    store: str | None = None
    pairs: str | None = None
    synthetic: str | None = None  # "seed,dim" or "dim"
    inventory: str | None = None
    cache_dir: str | None = None
    c2d_scale: float | None = None
    d2i_scale: float | None = None
    n_samples: int = 1
    seed: int = 0
    senses: str | None = None

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        return cls(
            mode=DefinitionSourceMode(args.mode),
            scoring=ScoringMode(args.scoring),
            store=args.store,
            pairs=args.pairs,
            synthetic=args.synthetic,
            inventory=args.inventory,
            cache_dir=args.cache_dir,
            c2d_scale=args.c2d_scale,
            d2i_scale=args.d2i_scale,
            n_samples=args.n_samples,
            seed=args.seed,
            senses=getattr(args, "senses", None),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        cfg = cls()
        for key, value in data.items():
            if not hasattr(cfg, key):
                raise ConfigError(f"{path}: unknown config key {key!r}")
            setattr(cfg, key, value)
        cfg.mode = DefinitionSourceMode(cfg.mode)
        cfg.scoring = ScoringMode(cfg.scoring)
        return cfg

    def describe(self) -> dict:
        return {
            "mode": self.mode.value,
            "scoring": self.scoring.value,
            "store": self.store,
            "pairs": self.pairs,
            "synthetic": self.synthetic,
            "inventory": self.inventory,
            "cache_dir": self.cache_dir,
            "c2d_scale": self.c2d_scale,
            "d2i_scale": self.d2i_scale,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "senses": self.senses,
        }


def _parse_synthetic(spec: str, default_seed: int) -> SyntheticEncoder:
    parts = spec.split(",")
    try:
        if len(parts) == 1:
            return SyntheticEncoder(seed=default_seed, dim=int(parts[0]))
        if len(parts) == 2:
            return SyntheticEncoder(seed=int(parts[0]), dim=int(parts[1]))
    except ValueError:
        pass
    raise ConfigError(f"--synthetic expects 'seed,dim' or 'dim', got {spec!r}")


def _load_sense_overrides(path: str) -> dict[str, int]:
    overrides: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ConfigError(f"{path}:{lineno}: expected 'id<TAB>sense_index'")
            overrides[parts[0]] = int(parts[1])
    return overrides


def build_ranker(config: RunConfig) -> Ranker:
    """Resolve a RunConfig into a ready Ranker."""
    vectors = None
    pairs = None
    store_scale = None
    if config.store:
        store = open_store(config.store)
        vectors = store
        store_scale = store.logit_scale
    if config.synthetic:
        if vectors is not None:
            raise ConfigError("give either --store or --synthetic, not both")
        vectors = _parse_synthetic(config.synthetic, config.seed)
    if config.pairs:
        pairs = open_pairs(config.pairs)
    if vectors is None and pairs is None:
        raise ConfigError("no provider: give --store, --synthetic, or --pairs")

    # Flag overrides beat the store's recorded scale, which beats 1.0.
    base_scale = store_scale if store_scale is not None else 1.0
    score_cfg = ScoreConfig(
        logit_scale=base_scale,
        mode=config.scoring,
        c2d_scale=config.c2d_scale,
        d2i_scale=config.d2i_scale,
    )

    inventory: SenseInventory | None = None
    if config.inventory:
        inventory = load_inventory(config.inventory)

    cache = DefinitionCache(config.cache_dir) if config.cache_dir else None
    overrides = _load_sense_overrides(config.senses) if config.senses else {}

    return Ranker(
        vectors=vectors,
        cfg=score_cfg,
        mode=config.mode,
        inventory=inventory,
        pairs=pairs,
        cache=cache,
        client=None,
        n_samples=config.n_samples,
        sense_overrides=overrides,
    )


# --- subcommands --------------------------------------------------------------


def cmd_rank(args: argparse.Namespace) -> int:
    config = RunConfig.from_args(args)
    ranker = build_ranker(config)
    instance = VwsdInstance(
        id=args.id,
        target=args.target,
        context=args.context,
        candidates=tuple(args.candidates),
        gold=args.gold,
    )
    outcome = ranker.rank_instance(instance)
    result = outcome.result
    print(f"instance   : {instance.id}")
    print(f"target     : {instance.target}")
    print(f"context    : {instance.context}")
    print(f"pathway    : {outcome.mode_used}" + ("  (fallback)" if outcome.fell_back else ""))
    if result.c2d is not None:
        print("definition distribution:")
        for i, p in enumerate(result.c2d.probs):
            text = result.definitions[i].definition if result.definitions else str(i)
            print(f"  [{i}] {p:.4f}  {text}")
    print("posterior:")
    for key, p in zip(result.posterior.support, result.posterior.probs):
        marker = " *" if key == instance.gold else ""
        print(f"  {p:.4f}  {key}{marker}")
    print(f"ranking    : {', '.join(result.ranking)}")
    print(f"prediction : {result.prediction}")
    if result.gold_rank is not None:
        print(f"gold rank  : {result.gold_rank}")
    return 0


def _evaluate_once(
    config: RunConfig, instances: list[VwsdInstance], workers: int
) -> evaluation.EvalReport:
    ranker = build_ranker(config)
    ranker.audit(instances)
    outcomes = rank_dataset(ranker, instances, workers=workers)
    # The ambiguity breakdown buckets by the target's inventory sense count
    # (also for generated-definition and baseline runs); without an inventory
    # fall back to the number of definitions actually scored.
    if ranker.inventory is not None:
        num_defs = {
            inst.id: ranker.inventory.ambiguity_class(inst.target).count
            for inst in instances
        }
    else:
        num_defs = {o.result.instance_id: o.num_defs for o in outcomes}
    return build_report(
        [o.result for o in outcomes],
        num_defs=num_defs,
        modes={o.result.instance_id: o.mode_used for o in outcomes},
        fallback_count=sum(1 for o in outcomes if o.fell_back),
        config=config.describe(),
    )


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = RunConfig.from_args(args)
    instances = evaluation.load_dataset(args.data, args.gold)
    if any(inst.gold is None for inst in instances):
        raise MissingGold("evaluation requires a gold file (--gold)")
    report = _evaluate_once(config, instances, args.workers)
    if args.compare:
        # the --compare config is the reference system; flips and deltas are
        # reported as reference -> this run
        reference = RunConfig.from_file(args.compare)
        reference_report = _evaluate_once(reference, instances, args.workers)
        comparison = compare_reports(reference_report, report)
        out: evaluation.EvalReport | evaluation.ComparisonReport = comparison
        print(evaluation.format_report(comparison), end="")
    else:
        out = report
        print(evaluation.format_report(report), end="")
    if args.out:
        emit_report(out, args.out, fmt="json")
        logger.info("report written to %s", args.out)
    return 0


def cmd_gendefs(args: argparse.Namespace) -> int:
    instances = evaluation.load_dataset(args.data)
    cache = DefinitionCache(args.cache_dir)
    if args.replay:
        client = ReplayClient(args.replay)
    else:
        client = HttpGenerationClient()

    inventory = load_inventory(args.inventory) if args.inventory else None
    if args.oov_only:
        if inventory is None:
            raise ConfigError("--oov-only needs --inventory")
        instances = [
            inst for inst in instances if not inventory.lookup(inst.target)
        ]

    styles = ["dg", "cadg"] if args.style == "both" else [args.style]
    rows: list[str] = []
    failures: list[str] = []
    for inst in instances:
        for style in styles:
            if style == "dg":
                prompt = defgen.build_dg_prompt(inst.target, inst.pos)
            else:
                prompt = defgen.build_cadg_prompt(inst.target, inst.pos, inst.context)
            req = GenRequest(
                prompt=prompt,
                n_samples=args.n_samples,
                temperature=args.temperature,
                target=inst.target,
                context=inst.context,
                pos=inst.pos,
            )
            try:
                samples = defgen.generate(client, req, cache)
            except GlossrankError as exc:
                failures.append(f"{inst.id}\t{style}\t{exc}")
                logger.warning("instance %s (%s): %s", inst.id, style, exc)
                continue
            for sample in samples:
                rows.append(f"{inst.target.lower()}\tn\t{sample}")

    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(rows) + ("\n" if rows else ""))
        print(f"wrote {len(rows)} definitions to {args.out}")
    if failures:
        failures_path = (args.out or "gendefs") + ".failures"
        with open(failures_path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(failures) + "\n")
        print(f"{len(failures)} failures listed in {failures_path}", file=sys.stderr)
        return 1
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    inventory = load_inventory(args.inventory) if args.inventory else None
    store = open_store(args.store) if args.store else None
    instances = evaluation.load_dataset(args.data) if args.data else None

    if store is not None:
        print(f"store       : {args.store}")
        print(f"  dim         : {store.dim}")
        print(f"  logit_scale : {store.logit_scale}")
        print(f"  text keys   : {len(store.text_table)}")
        print(f"  image keys  : {len(store.image_table)}")
    if inventory is not None:
        lemmas = len(inventory.by_lemma)
        print(f"inventory   : {args.inventory}")
        print(f"  entries     : {len(inventory)}")
        print(f"  lemmas      : {lemmas}")
    if instances is not None:
        print(f"dataset     : {args.data}")
        print(f"  instances   : {len(instances)}")
        if inventory is not None:
            oov = sum(1 for i in instances if not inventory.lookup(i.target))
            pct = 100.0 * oov / len(instances) if instances else 0.0
            print(f"  OOV         : {oov}/{len(instances)} = {pct:.2f}%")
        if store is not None:
            missing: list[str] = []
            for inst in instances:
                if not store.has_text(inst.context):
                    missing.append(f"TEXT {inst.context!r}")
                for img in inst.candidates:
                    if not store.has_image(img):
                        missing.append(f"IMAGE {img!r}")
            if missing:
                print(f"  missing keys ({len(missing)}):")
                for item in missing:
                    print(f"    {item}")
            else:
                print("  all dataset keys present in store")
    if store is None and inventory is None and instances is None:
        print("nothing to inspect: give --store, --inventory, and/or --data")
        return 2
    return 0


# --- argument parsing -----------------------------------------------------------


def _add_provider_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--store", help="embedding store file")
    parser.add_argument("--pairs", help="pair-score file (cross-encoder path)")
    parser.add_argument(
        "--synthetic", help="synthetic encoder as 'seed,dim' (or 'dim', seed from --seed)"
    )
    parser.add_argument("--inventory", help="sense inventory TSV")
    parser.add_argument("--cache-dir", help="definition generation cache directory")
    parser.add_argument(
        "--mode",
        default="none",
        choices=[m.value for m in DefinitionSourceMode],
        help="definition source (default: none)",
    )
    parser.add_argument(
        "--scoring",
        default="baseline",
        choices=[m.value for m in ScoringMode],
        help="prediction pathway (default: baseline)",
    )
    parser.add_argument("--c2d-scale", type=float, help="softmax scale for C2D")
    parser.add_argument("--d2i-scale", type=float, help="softmax scale for D2I")
    parser.add_argument("--n-samples", type=int, default=1,
                        help="generated definitions per instance (default: 1)")
    parser.add_argument("--seed", type=int, default=0, help="synthetic encoder seed")
    parser.add_argument(
        "--senses", help="external sense predictions: 'id<TAB>definition_index' lines"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glossrank",
        description="Rank candidate images for ambiguous words using sense definitions.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_rank = sub.add_parser("rank", help="rank one instance")
    _add_provider_args(p_rank)
    p_rank.add_argument("--id", default="instance", help="instance id")
    p_rank.add_argument("--target", required=True)
    p_rank.add_argument("--context", required=True)
    p_rank.add_argument("--candidates", required=True, nargs="+",
                        help="candidate image keys")
    p_rank.add_argument("--gold", help="gold image key (optional)")
    p_rank.set_defaults(func=cmd_rank)

    p_eval = sub.add_parser("evaluate", help="evaluate a dataset")
    _add_provider_args(p_eval)
    p_eval.add_argument("--data", required=True, help="dataset TSV")
    p_eval.add_argument("--gold", help="gold file, one image key per line")
    p_eval.add_argument("--compare", help="second RunConfig JSON to compare against")
    p_eval.add_argument("--out", help="write JSON report here")
    p_eval.add_argument("--workers", type=int, default=1)
    p_eval.set_defaults(func=cmd_evaluate)

    p_gen = sub.add_parser("gendefs", help="pre-generate definitions into the cache")
    p_gen.add_argument("--data", required=True, help="dataset TSV")
    p_gen.add_argument("--cache-dir", required=True)
    p_gen.add_argument("--inventory", help="sense inventory (for --oov-only)")
    p_gen.add_argument("--style", default="cadg", choices=["dg", "cadg", "both"])
    p_gen.add_argument("--n-samples", type=int, default=1)
    p_gen.add_argument("--temperature", type=float, default=1.0)
    p_gen.add_argument("--oov-only", action="store_true",
                       help="only process targets absent from the inventory")
    p_gen.add_argument("--replay", help="fixture JSON serving prompt -> samples")
    p_gen.add_argument("--out", help="write generated definitions TSV here")
    p_gen.set_defaults(func=cmd_gendefs)

    p_inspect = sub.add_parser("inspect", help="print diagnostics")
    p_inspect.add_argument("--store")
    p_inspect.add_argument("--inventory")
    p_inspect.add_argument("--data")
    p_inspect.set_defaults(func=cmd_inspect)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except GlossrankError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
