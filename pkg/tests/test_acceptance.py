"""Acceptance suite: one test per release criterion, at its stated tolerance.

Run with `pytest -s tests/test_acceptance.py` to see one PASS line per
criterion; any assertion failure marks that criterion failed.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from glossrank.cli import main as cli_main
from glossrank.defgen import build_cadg_prompt
from glossrank.evaluation import flip_ratio, hits_at_1, mrr, paired_t_test
from glossrank.inventory import Pos
from glossrank.scoring import (
    Distribution,
    ScoreConfig,
    baseline_posterior,
    c2d,
    d2i,
    marginal_posterior,
    pipeline_posterior,
    softmax,
)

from test_evaluation import P_T1_DF3, results_with_ranks
from conftest import image_rep, text_rep

ROOT = Path(__file__).resolve().parent.parent
GOLDEN = ROOT / "tests" / "data" / "golden"


def ok(name: str) -> None:
    print(f"ACCEPTANCE {name}: PASS")


class TestAcceptance:
    def test_marginalization_oracle(self):
        """1,000 random fixtures match a brute-force double sum within 1e-12."""
        rng = np.random.default_rng(101)
        start = time.perf_counter()
        for _ in range(1000):
            n_defs = int(rng.integers(1, 9))
            n_imgs = int(rng.integers(1, 11))
            cd = rng.dirichlet(np.ones(n_defs))
            rows = [rng.dirichlet(np.ones(n_imgs)) for _ in range(n_defs)]
            support = tuple(f"v{j}" for j in range(n_imgs))
            got = marginal_posterior(
                Distribution(cd, tuple(range(n_defs))),
                [Distribution(r, support) for r in rows],
            ).probs
            brute = np.zeros(n_imgs)
            for i in range(n_defs):
                for j in range(n_imgs):
                    brute[j] += rows[i][j] * cd[i]
            assert np.max(np.abs(got - brute)) <= 1e-12
        elapsed = time.perf_counter() - start
        assert elapsed < 1.0, f"oracle sweep took {elapsed:.2f}s"
        ok("marginalization-oracle")

    def test_collapse_identities(self):
        """|D|=1: marginal == pipeline == the single row, exactly."""
        rng = np.random.default_rng(103)
        for _ in range(100):
            dim, n_imgs = 16, int(rng.integers(1, 11))
            ctx = text_rep("c", rng.standard_normal(dim))
            joint = text_rep("j", rng.standard_normal(dim))
            imgs = [image_rep(f"v{j}", rng.standard_normal(dim)) for j in range(n_imgs)]
            cd = c2d(ctx, [joint])
            row = d2i(joint, imgs)
            assert np.array_equal(marginal_posterior(cd, [row]).probs, row.probs)
            assert np.array_equal(pipeline_posterior(cd, [row]).probs, row.probs)

            n_defs = int(rng.integers(2, 7))
            probs = rng.dirichlet(np.ones(n_imgs))
            shared = Distribution(probs, tuple(f"v{j}" for j in range(n_imgs)))
            cd_many = Distribution(
                rng.dirichlet(np.ones(n_defs)), tuple(range(n_defs))
            )
            out = marginal_posterior(cd_many, [shared] * n_defs)
            assert np.allclose(out.probs, shared.probs, atol=1e-15, rtol=0)
        ok("collapse-identities")

    def test_distribution_invariants(self):
        """All pathway outputs: entries >= 0 and sum to 1 within 1e-9."""
        rng = np.random.default_rng(107)
        checked = 0
        for _ in range(250):
            dim = 12
            n_defs = int(rng.integers(1, 7))
            n_imgs = int(rng.integers(1, 11))
            cfg = ScoreConfig(logit_scale=float(rng.uniform(0.1, 8.0)))
            ctx = text_rep("c", rng.standard_normal(dim))
            defs = [text_rep(f"j{i}", rng.standard_normal(dim)) for i in range(n_defs)]
            imgs = [image_rep(f"v{j}", rng.standard_normal(dim)) for j in range(n_imgs)]
            cd = c2d(ctx, defs, cfg)
            rows = [d2i(j, imgs, cfg) for j in defs]
            outputs = [
                softmax(rng.standard_normal(int(rng.integers(1, 12)))),
                cd,
                *rows,
                marginal_posterior(cd, rows),
                baseline_posterior(ctx, imgs, cfg),
            ]
            for dist in outputs:
                assert np.all(dist.probs >= 0)
                assert abs(float(dist.probs.sum()) - 1.0) <= 1e-9
                checked += 1
        assert checked > 1000
        ok("distribution-invariants")

    def test_argmax_invariance(self):
        """Rankings identical under positive scales and constant shifts."""
        rng = np.random.default_rng(109)
        for _ in range(500):
            scores = rng.standard_normal(int(rng.integers(2, 11)))
            ref = np.argsort(-softmax(scores, 1.0).probs, kind="stable")
            for scale in (0.25, 1.0, 2.0, math.e, 10.0):
                for shift in (0.0, 1.0, -5.5, 100.0, 1000.0):
                    got = np.argsort(
                        -softmax(scores + shift, scale).probs, kind="stable"
                    )
                    assert np.array_equal(ref, got)
        ok("argmax-invariance")

    def test_metric_fixtures(self):
        """Hand-derived metric values and published flip-table arithmetic."""
        rs = results_with_ranks([1, 2, 4])
        assert hits_at_1(rs) == pytest.approx(33.33, abs=0.005)
        assert mrr(rs) == pytest.approx(58.33, abs=0.005)
        assert flip_ratio(199, 66) == pytest.approx(3.02, abs=0.005)
        assert flip_ratio(523, 190) == pytest.approx(2.75, abs=0.005)
        ok("metric-fixtures")

    def test_paired_t_test_fixture(self):
        """t = 1.0 at df 3; p checked against the frozen quadrature oracle."""
        res = paired_t_test([1, 1, 0, 0], [1, 0, 0, 0])
        assert res.t_stat == pytest.approx(1.0, abs=1e-9)
        assert res.df == 3
        assert res.p_value == pytest.approx(P_T1_DF3, abs=1e-3)
        ok("paired-t-test")

    def test_end_to_end_golden_run(self, tmp_path, monkeypatch):
        """Definition marginalization beats context-only scoring by >= 20
        points on the committed fixture, and reports are byte-identical."""
        monkeypatch.chdir(ROOT)
        rel = GOLDEN.relative_to(ROOT)
        common = [
            "--data", str(rel / "dataset.tsv"),
            "--gold", str(rel / "gold.txt"),
            "--store", str(rel / "vectors.store"),
            "--inventory", str(rel / "inventory.tsv"),
        ]

        def run(mode, scoring, out):
            code = cli_main([
                "evaluate", *common, "--mode", mode, "--scoring", scoring,
                "--out", str(out),
            ])
            assert code == 0
            return out.read_bytes()

        base_1 = run("none", "baseline", tmp_path / "base1.json")
        base_2 = run("none", "baseline", tmp_path / "base2.json")
        marg_1 = run("wn", "marginal", tmp_path / "marg1.json")
        marg_2 = run("wn", "marginal", tmp_path / "marg2.json")

        assert base_1 == base_2, "baseline report not reproducible"
        assert marg_1 == marg_2, "marginal report not reproducible"
        assert base_1 == (GOLDEN / "report_baseline.json").read_bytes()
        assert marg_1 == (GOLDEN / "report_marginal.json").read_bytes()

        base = json.loads(base_1)
        marg = json.loads(marg_1)
        assert marg["hits_at_1"] - base["hits_at_1"] >= 20.0
        ok("end-to-end-golden")

    def test_prompt_goldens(self):
        """Context-aware prompt matches the committed string exactly."""
        expected = 'Define "angora" in angora city.\nangora (n)'
        assert build_cadg_prompt("angora", Pos.NOUN, "angora city") == expected
        ok("prompt-goldens")
