import json

import numpy as np
import pytest

from conftest import auroc_pairs_oracle
from zsfuse.errors import ConfigError, EmptyEvaluationError, ValidationError
from zsfuse.evaluation import (EvalReport, MethodMetrics, SplitSpec, auroc,
                               emit_report, format_report_csv,
                               format_report_json, generate_synthetic_bundle,
                               openset_scores, parse_report_json,
                               split_catalog, topk_accuracy)
from zsfuse.store import ClassCatalog


@pytest.fixture
def catalog10():
    return ClassCatalog.from_names([f"c{i}" for i in range(10)])


class TestSplit:
    def test_counts_and_disjointness(self, catalog10):
        spec = split_catalog(catalog10, 6, seed=7)
        assert len(spec.closed) == 6 and len(spec.open) == 4
        assert set(spec.closed) | set(spec.open) == set(catalog10.names)
        assert not set(spec.closed) & set(spec.open)

    def test_one_open_class(self, catalog10):
        spec = split_catalog(catalog10, 9, seed=3)
        assert len(spec.open) == 1

    def test_deterministic(self, catalog10):
        a = split_catalog(catalog10, 6, seed=99)
        b = split_catalog(catalog10, 6, seed=99)
        assert a == b

    def test_m_out_of_range(self, catalog10):
        for m in (0, 10, 11):
            with pytest.raises(ConfigError):
                split_catalog(catalog10, m, seed=0)

    def test_json_roundtrip(self, catalog10):
        spec = split_catalog(catalog10, 4, seed=1, dataset="toy")
        back = SplitSpec.from_dict(json.loads(json.dumps(spec.to_dict())))
        assert back == spec


class TestTopk:
    def test_perfect_one_hot(self, catalog10):
        labels = [f"c{i}" for i in range(10)]
        p = np.eye(10)
        for k in (1, 3, 5):
            assert topk_accuracy(p, labels, catalog10, labels, k) == 1.0

    def test_k_equal_label_space(self, catalog10, rng):
        labels = ["c0", "c1", "c2"]
        p = rng.dirichlet(np.ones(10), size=3)
        assert topk_accuracy(p, labels, catalog10, ["c0", "c1", "c2"], 3) == 1.0

    def test_hand_built_ranks(self):
        catalog = ClassCatalog.from_names(["a", "b", "c"])
        # true-label ranks per row: 1, 2, 3, 1
        p = np.array([
            [0.7, 0.2, 0.1],   # true a, rank 1
            [0.5, 0.3, 0.2],   # true b, rank 2
            [0.5, 0.3, 0.2],   # true c, rank 3
            [0.1, 0.8, 0.1],   # true b, rank 1
        ])
        labels = ["a", "b", "c", "b"]
        space = ["a", "b", "c"]
        assert topk_accuracy(p, labels, catalog, space, 1) == 0.5
        assert topk_accuracy(p, labels, catalog, space, 2) == 0.75
        assert topk_accuracy(p, labels, catalog, space, 3) == 1.0

    def test_tie_break_prefers_lower_catalog_index(self):
        catalog = ClassCatalog.from_names(["a", "b"])
        p = np.array([[0.5, 0.5]])
        assert topk_accuracy(p, ["a"], catalog, ["a", "b"], 1) == 1.0
        assert topk_accuracy(p, ["b"], catalog, ["a", "b"], 1) == 0.0

    def test_non_decreasing_in_k(self, catalog10, rng):
        labels = [f"c{i % 10}" for i in range(30)]
        p = rng.dirichlet(np.ones(10), size=30)
        accs = [topk_accuracy(p, labels, catalog10, catalog10.names, k)
                for k in range(1, 11)]
        assert all(b >= a for a, b in zip(accs, accs[1:]))
        assert accs[-1] == 1.0

    def test_column_permutation_invariance(self, rng):
        names = ["a", "b", "c", "d"]
        catalog = ClassCatalog.from_names(names)
        p = rng.dirichlet(np.ones(4), size=8)
        labels = [names[i % 4] for i in range(8)]
        perm = [2, 0, 3, 1]
        catalog_p = ClassCatalog.from_names([names[i] for i in perm])
        p_p = p[:, perm]
        for k in (1, 2, 3):
            assert topk_accuracy(p, labels, catalog, names, k) == \
                topk_accuracy(p_p, labels, catalog_p, names, k)

    def test_empty_evaluation(self, catalog10, rng):
        p = rng.dirichlet(np.ones(10), size=2)
        with pytest.raises(EmptyEvaluationError):
            topk_accuracy(p, ["c9", "c9"], catalog10, ["c0"], 1)


class TestAuroc:
    def test_perfect_separation(self):
        assert auroc([0.9, 0.8], [0.3, 0.4]) == 1.0

    def test_identical_multisets(self):
        assert auroc([0.1, 0.5, 0.9], [0.1, 0.5, 0.9]) == 0.5

    def test_hand_pairs(self):
        assert auroc([0.9, 0.4], [0.5, 0.3]) == 0.75

    def test_empty_error(self):
        with pytest.raises(EmptyEvaluationError):
            auroc([], [0.5])

    def test_complement_identity(self, rng):
        pos = rng.normal(size=37)
        neg = rng.normal(size=23)
        assert auroc(pos, neg) + auroc(neg, pos) == 1.0

    def test_invariant_under_monotone_transform(self, rng):
        pos = rng.uniform(size=20)
        neg = rng.uniform(size=30)
        f = lambda x: np.exp(3 * np.asarray(x)) + 5
        assert auroc(pos, neg) == auroc(f(pos), f(neg))

    def test_matches_pair_count_oracle(self, rng):
        for _ in range(50):
            # quantized scores force plenty of ties
            pos = np.round(rng.uniform(size=rng.integers(1, 40)), 1)
            neg = np.round(rng.uniform(size=rng.integers(1, 40)), 1)
            assert abs(auroc(pos, neg) -
                       auroc_pairs_oracle(list(pos), list(neg))) <= 1e-12


class TestOpensetScores:
    def _split(self, catalog):
        return SplitSpec("", 2, 0, ["a", "b"], ["c"])

    def test_one_hot_closed(self):
        catalog = ClassCatalog.from_names(["a", "b", "c"])
        p = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        pos, neg = openset_scores(p, ["a", "c"], self._split(catalog), catalog)
        assert pos[0] == 1.0

    def test_uniform_row_score(self):
        catalog = ClassCatalog.from_names(["a", "b", "c"])
        p = np.full((2, 3), 1 / 3)
        pos, neg = openset_scores(p, ["a", "c"], self._split(catalog), catalog)
        assert pos[0] == pytest.approx(1 / 3)
        assert neg[0] == pytest.approx(1 / 3)

    def test_matches_row_max_oracle(self, rng):
        catalog = ClassCatalog.from_names(["a", "b", "c", "d"])
        split = SplitSpec("", 2, 0, ["b", "d"], ["a", "c"])
        p = rng.dirichlet(np.ones(4), size=4)
        labels = ["b", "a", "d", "c"]
        pos, neg = openset_scores(p, labels, split, catalog)
        closed_cols = [1, 3]
        expected = [max(p[t, c] for c in closed_cols) for t in range(4)]
        assert list(pos) == [expected[0], expected[2]]
        assert list(neg) == [expected[1], expected[3]]

    def test_missing_open_samples(self):
        catalog = ClassCatalog.from_names(["a", "b", "c"])
        p = np.full((2, 3), 1 / 3)
        with pytest.raises(EmptyEvaluationError):
            openset_scores(p, ["a", "b"], self._split(catalog), catalog)


class TestSyntheticBundle:
    def test_noiseless_scores_true_class_perfectly(self):
        from zsfuse.fusion import FusionConfig
        from zsfuse.pipeline import MethodSpec, calibrate_scores, compute_scores
        b = generate_synthetic_bundle(5, 4, 16, (0, 0, 0), 2, seed=0)
        specs = [MethodSpec("M1", "text_image", "m1"),
                 MethodSpec("M2", "image_image", "m2"),
                 MethodSpec("M3", "image_image", "m3")]
        scores = compute_scores(b, specs)
        col = {name: i for i, name in enumerate(b.catalog.names)}
        for sm in scores.values():
            for t, lbl in enumerate(b.labels):
                assert sm.values[t, col[lbl]] == pytest.approx(1.0, abs=1e-5)
        probs = calibrate_scores(scores, FusionConfig())
        for p in probs.values():
            assert topk_accuracy(p.values, b.labels, b.catalog,
                                 b.catalog.names, 1) == 1.0

    def test_deterministic_for_seed(self):
        a = generate_synthetic_bundle(4, 3, 8, (0.4, 0.5, 0.6), 2, seed=11)
        b = generate_synthetic_bundle(4, 3, 8, (0.4, 0.5, 0.6), 2, seed=11)
        for bb in a.test:
            assert a.test[bb].data.tobytes() == b.test[bb].data.tobytes()
        for bb in a.refs:
            assert a.refs[bb].data.tobytes() == b.refs[bb].data.tobytes()
        assert a.labels == b.labels

    def test_parameter_validation(self):
        with pytest.raises(ConfigError):
            generate_synthetic_bundle(0, 1, 8, (0, 0, 0), 1, 0)
        with pytest.raises(ConfigError):
            generate_synthetic_bundle(2, 1, 1, (0, 0, 0), 1, 0)
        with pytest.raises(ConfigError):
            generate_synthetic_bundle(2, 1, 8, (-0.1, 0, 0), 1, 0)


def _sample_report():
    mm = MethodMetrics(0.5, 0.75, 1.0, 0.9978)
    return EvalReport(methods={"M1": mm}, fused=MethodMetrics(0.6, 0.8, 1.0, 0.91),
                      counts={"test": 4}, config={"scheme": "max"})


class TestReport:
    def test_json_roundtrip(self):
        report = _sample_report()
        back = parse_report_json(format_report_json(report))
        assert back == report

    def test_csv_header_and_rows(self):
        csv = format_report_csv(_sample_report())
        lines = csv.splitlines()
        assert lines[0] == "method,top1,top3,top5,auroc"
        assert lines[1].startswith("M1,")
        assert lines[-1].startswith("fused,")

    def test_six_decimal_formatting(self):
        text = format_report_json(_sample_report())
        assert '"auroc": 0.997800' in text

    def test_emit_report(self, tmp_path):
        emit_report(_sample_report(), "json", tmp_path / "r.json")
        emit_report(_sample_report(), "csv", tmp_path / "r.csv")
        assert parse_report_json((tmp_path / "r.json").read_text()) == _sample_report()
        with pytest.raises(ConfigError):
            emit_report(_sample_report(), "xml", tmp_path / "r.xml")

    def test_metric_invariants(self):
        with pytest.raises(ValidationError):
            MethodMetrics(0.9, 0.5, 1.0, 0.5)
        with pytest.raises(ValidationError):
            MethodMetrics(0.1, 0.5, 1.0, 1.5)
