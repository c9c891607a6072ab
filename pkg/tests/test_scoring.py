import json
import math

import numpy as np
import pytest

from conftest import TESTDATA, image_rep, text_rep, unit
from glossrank.errors import (
    DimensionMismatch,
    EmptyField,
    EmptyInput,
    GoldNotInSupport,
    NonFiniteInput,
    ShapeMismatch,
    SupportMismatch,
)
from glossrank.scoring import (
    Distribution,
    ScoreConfig,
    baseline_posterior,
    build_joint_text,
    c2d,
    d2i,
    marginal_posterior,
    pipeline_posterior,
    rank,
    softmax,
)

E = math.e


def dist(probs, support=None):
    probs = np.asarray(probs, dtype=np.float64)
    support = tuple(range(probs.size)) if support is None else tuple(support)
    return Distribution(probs, support)


class TestSoftmax:
    def test_symmetry(self):
        assert np.allclose(softmax([0.0, 0.0]).probs, [0.5, 0.5])

    def test_hand_computed_ratio(self):
        # exp(ln 2) : exp(0) = 2 : 1
        d = softmax([math.log(2.0), 0.0])
        assert np.allclose(d.probs, [2 / 3, 1 / 3], atol=1e-15)

    def test_large_scores_do_not_overflow(self):
        d = softmax([1000.0, 0.0])
        assert np.all(np.isfinite(d.probs))
        assert d.probs[0] == pytest.approx(1.0)
        assert d.probs[1] == pytest.approx(0.0, abs=1e-300)

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            softmax([])

    def test_non_finite_input(self):
        with pytest.raises(NonFiniteInput):
            softmax([1.0, math.nan])
        with pytest.raises(NonFiniteInput):
            softmax([1.0, math.inf])

    def test_shift_invariance_is_exact(self):
        # Dyadic scores and shifts make the additions exact, so the
        # max-subtracted values are bit-identical.
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = rng.integers(2, 10)
            s = rng.integers(-(2**20), 2**20, size=n).astype(np.float64) / 256.0
            k = float(rng.integers(-(2**20), 2**20)) / 256.0
            assert np.array_equal(softmax(s).probs, softmax(s + k).probs)

    def test_scale_preserves_ordering(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            s = rng.standard_normal(8)
            base_order = np.argsort(-softmax(s, 1.0).probs, kind="stable")
            for scale in (0.25, 0.5, 2.0, 7.5):
                order = np.argsort(-softmax(s, scale).probs, kind="stable")
                assert np.array_equal(base_order, order)


class TestJointTemplate:
    def test_template_goldens(self):
        cases = json.loads((TESTDATA / "joint_text_golden.json").read_text("utf-8"))
        for case in cases:
            assert build_joint_text(case["context"], case["definition"]) == case["joint"]

    def test_no_inner_normalization(self):
        assert build_joint_text("a  b", "d") == "a  b : d"

    def test_empty_fields(self):
        with pytest.raises(EmptyField):
            build_joint_text("", "d")
        with pytest.raises(EmptyField):
            build_joint_text("c", "")


class TestC2D:
    def test_single_definition_collapses_to_one(self):
        ctx = text_rep("ctx", [1.0, 0.0])
        d = c2d(ctx, [text_rep("j0", [0.3, 0.7])])
        assert d.probs.tolist() == [1.0]

    def test_equal_dots_are_uniform(self):
        ctx = text_rep("ctx", [1.0, 0.0, 0.0])
        defs = [text_rep("j0", [0.0, 1.0, 0.0]), text_rep("j1", [0.0, 0.0, 1.0])]
        assert np.allclose(c2d(ctx, defs).probs, [0.5, 0.5])

    def test_hand_softmax_of_unit_dot(self):
        ctx = text_rep("ctx", [1.0, 0.0])
        defs = [text_rep("j0", [1.0, 0.0]), text_rep("j1", [0.0, 1.0])]
        d = c2d(ctx, defs)
        assert np.allclose(d.probs, [E / (E + 1), 1 / (E + 1)], atol=1e-12)

    def test_dimension_mismatch(self):
        ctx = text_rep("ctx", [1.0, 0.0])
        with pytest.raises(DimensionMismatch):
            c2d(ctx, [text_rep("j0", [1.0, 0.0, 0.0])])

    def test_empty_definitions(self):
        with pytest.raises(EmptyInput):
            c2d(text_rep("ctx", [1.0, 0.0]), [])


class TestD2I:
    def test_single_candidate(self):
        joint = text_rep("j", [1.0, 0.0])
        d = d2i(joint, [image_rep("img", [0.0, 1.0])])
        assert d.probs.tolist() == [1.0]
        assert d.support == ("img",)

    def test_orthogonal_images_uniform(self):
        joint = text_rep("j", [1.0, 0.0, 0.0])
        images = [
            image_rep("a", [0.0, 1.0, 0.0]),
            image_rep("b", [0.0, 0.0, 1.0]),
            image_rep("c", [0.0, -1.0, 0.0]),
        ]
        assert np.allclose(d2i(joint, images).probs, [1 / 3] * 3)

    def test_hand_softmax(self):
        joint = text_rep("j", [1.0, 0.0])
        images = [
            image_rep("a", [1.0, 0.0]),
            image_rep("b", [0.0, 1.0]),
            image_rep("c", [0.0, -1.0]),
        ]
        d = d2i(joint, images)
        assert np.allclose(
            d.probs, [E / (E + 2), 1 / (E + 2), 1 / (E + 2)], atol=1e-12
        )


class TestMarginal:
    def test_single_definition_collapse_is_exact(self):
        row = dist([0.2, 0.8], ["a", "b"])
        out = marginal_posterior(dist([1.0]), [row])
        assert np.array_equal(out.probs, row.probs)

    def test_hand_matrix_vector_product(self):
        rows = [dist([0.5, 0.5], ["a", "b"]), dist([0.9, 0.1], ["a", "b"])]
        out = marginal_posterior(dist([0.6, 0.4]), rows)
        assert np.allclose(out.probs, [0.66, 0.34], atol=1e-12)

    def test_identical_rows_return_that_row(self):
        row = dist([0.1, 0.2, 0.7], ["a", "b", "c"])
        c = softmax([0.0, 0.0, 0.0])
        out = marginal_posterior(c, [row, row, row])
        assert np.allclose(out.probs, row.probs, atol=1e-15)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            marginal_posterior(dist([0.5, 0.5]), [dist([1.0], ["a"])])

    def test_support_mismatch(self):
        rows = [dist([1.0, 0.0], ["a", "b"]), dist([1.0, 0.0], ["a", "c"])]
        with pytest.raises(SupportMismatch):
            marginal_posterior(dist([0.5, 0.5]), rows)

    def test_matches_brute_force_double_loop(self):
        rng = np.random.default_rng(3)
        for _ in range(300):
            n_defs = int(rng.integers(1, 9))
            n_imgs = int(rng.integers(1, 11))
            cd = rng.dirichlet(np.ones(n_defs))
            rows = [rng.dirichlet(np.ones(n_imgs)) for _ in range(n_defs)]
            support = tuple(f"v{j}" for j in range(n_imgs))
            out = marginal_posterior(
                dist(cd), [dist(r, support) for r in rows]
            )
            expected = [
                sum(rows[i][j] * cd[i] for i in range(n_defs))
                for j in range(n_imgs)
            ]
            assert np.allclose(out.probs, expected, atol=1e-12, rtol=0)


class TestBaseline:
    def test_single_candidate(self):
        ctx = text_rep("c", [1.0, 0.0])
        out = baseline_posterior(ctx, [image_rep("a", [0.0, 1.0])])
        assert out.probs.tolist() == [1.0]

    def test_gold_aligned_context_scale_5(self):
        dim = 10
        ctx = text_rep("c", np.eye(dim)[0])
        images = [image_rep("gold", np.eye(dim)[0])]
        images += [image_rep(f"d{i}", np.eye(dim)[i]) for i in range(1, dim)]
        out = baseline_posterior(ctx, images, ScoreConfig(logit_scale=5.0))
        assert out.probs[0] == pytest.approx(math.exp(5) / (math.exp(5) + 9), abs=1e-12)

    def test_identical_candidates_uniform(self):
        ctx = text_rep("c", [1.0, 0.0])
        images = [image_rep(f"i{k}", [0.6, 0.8]) for k in range(4)]
        assert np.allclose(baseline_posterior(ctx, images).probs, [0.25] * 4)


class TestPipeline:
    def test_argmax_selects_first_row(self):
        rows = [dist([0.5, 0.5], ["a", "b"]), dist([0.9, 0.1], ["a", "b"])]
        out = pipeline_posterior(dist([0.6, 0.4]), rows)
        assert np.array_equal(out.probs, rows[0].probs)

    def test_one_hot_picks_exact_row(self):
        rows = [dist([0.5, 0.5], ["a", "b"]), dist([0.9, 0.1], ["a", "b"])]
        out = pipeline_posterior(dist([0.0, 1.0]), rows)
        assert np.array_equal(out.probs, rows[1].probs)

    def test_tie_takes_lowest_index(self):
        rows = [dist([0.5, 0.5], ["a", "b"]), dist([0.9, 0.1], ["a", "b"])]
        out = pipeline_posterior(dist([0.5, 0.5]), rows)
        assert np.array_equal(out.probs, rows[0].probs)


class TestRank:
    def test_basic_ranking_and_gold(self):
        r = rank(dist([0.1, 0.7, 0.2], ["a", "b", "c"]), gold="b")
        assert r.prediction == "b"
        assert r.ranking == ("b", "c", "a")
        assert r.gold_rank == 1

    def test_stable_tie_break(self):
        r = rank(dist([0.5, 0.5], ["a", "b"]), gold="b")
        assert r.prediction == "a"
        assert r.gold_rank == 2

    def test_marginal_example_gold_first(self):
        rows = [dist([0.5, 0.5], ["a", "b"]), dist([0.9, 0.1], ["a", "b"])]
        posterior = marginal_posterior(dist([0.6, 0.4]), rows)
        assert rank(posterior, gold="a").gold_rank == 1

    def test_gold_not_in_support(self):
        with pytest.raises(GoldNotInSupport):
            rank(dist([1.0], ["a"]), gold="zzz")

    def test_prediction_is_first_ranked(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            probs = rng.dirichlet(np.ones(6))
            r = rank(dist(probs, [f"c{i}" for i in range(6)]))
            assert r.prediction == r.ranking[0]


class TestDistributionInvariants:
    def test_negative_probs_rejected(self):
        with pytest.raises(NonFiniteInput):
            Distribution(np.array([-0.1, 1.1]), ("a", "b"))

    def test_sum_must_be_one(self):
        with pytest.raises(NonFiniteInput):
            Distribution(np.array([0.5, 0.6]), ("a", "b"))

    def test_support_length_must_match(self):
        with pytest.raises(ShapeMismatch):
            Distribution(np.array([1.0]), ("a", "b"))

    def test_all_pathways_produce_valid_distributions(self):
        rng = np.random.default_rng(13)
        for _ in range(200):
            dim = 8
            n_defs = int(rng.integers(1, 6))
            n_imgs = int(rng.integers(1, 11))
            ctx = text_rep("c", rng.standard_normal(dim))
            defs = [text_rep(f"j{i}", rng.standard_normal(dim)) for i in range(n_defs)]
            imgs = [image_rep(f"v{j}", rng.standard_normal(dim)) for j in range(n_imgs)]
            cfg = ScoreConfig(logit_scale=float(rng.uniform(0.2, 5.0)))
            cd = c2d(ctx, defs, cfg)
            rows = [d2i(j, imgs, cfg) for j in defs]
            for d in (cd, *rows, marginal_posterior(cd, rows),
                      pipeline_posterior(cd, rows), baseline_posterior(ctx, imgs, cfg)):
                assert np.all(d.probs >= 0)
                assert abs(float(d.probs.sum()) - 1.0) <= 1e-9


class TestModeIdentities:
    def _setup(self, rng, n_defs, dim=8, n_imgs=5):
        ctx = text_rep("c", rng.standard_normal(dim))
        defs = [text_rep(f"j{i}", rng.standard_normal(dim)) for i in range(n_defs)]
        imgs = [image_rep(f"v{j}", rng.standard_normal(dim)) for j in range(n_imgs)]
        return ctx, defs, imgs

    def test_single_definition_marginal_equals_pipeline_equals_row(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            ctx, defs, imgs = self._setup(rng, n_defs=1)
            cd = c2d(ctx, defs)
            row = d2i(defs[0], imgs)
            assert np.array_equal(marginal_posterior(cd, [row]).probs, row.probs)
            assert np.array_equal(pipeline_posterior(cd, [row]).probs, row.probs)

    def test_rows_equal_to_baseline_make_marginal_equal_baseline(self):
        rng = np.random.default_rng(19)
        for _ in range(50):
            ctx, defs, imgs = self._setup(rng, n_defs=4)
            base = baseline_posterior(ctx, imgs)
            cd = c2d(ctx, defs)
            out = marginal_posterior(cd, [base] * len(defs))
            assert np.allclose(out.probs, base.probs, atol=1e-15)

    def test_argmax_invariant_to_scale_and_shift(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            scores = rng.standard_normal(int(rng.integers(2, 11)))
            ref = np.argsort(-softmax(scores, 1.0).probs, kind="stable")
            for scale in (0.5, 1.0, 3.0):
                for shift in (0.0, -4.0, 11.5):
                    got = np.argsort(-softmax(scores + shift, scale).probs, kind="stable")
                    assert np.array_equal(ref, got)
