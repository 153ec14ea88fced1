import numpy as np
import pytest

from zsfuse.errors import ValidationError
from zsfuse.estimator import ZeroShotFusionClassifier
from zsfuse.evaluation import generate_synthetic_bundle

METHODS = [("M1", "text_image", "m1"),
           ("M2", "image_image", "m2"),
           ("M3", "image_image", "m3")]


@pytest.fixture
def bundle():
    return generate_synthetic_bundle(5, 6, 16, (0.3, 0.3, 0.3), 3, seed=5)


def _views(bundle):
    return {bb: m.data for bb, m in bundle.test.items()}


def test_get_set_params_roundtrip():
    clf = ZeroShotFusionClassifier(methods=METHODS, scheme="max", temperature=10.0)
    params = clf.get_params()
    assert params["scheme"] == "max"
    clone = ZeroShotFusionClassifier().set_params(**params)
    assert clone.get_params() == params


def test_fit_returns_self_and_sets_state(bundle):
    clf = ZeroShotFusionClassifier(methods=METHODS)
    assert clf.fit(bundle) is clf
    assert list(clf.classes_) == bundle.catalog.names


def test_predict_proba_rows_sum_to_one(bundle):
    clf = ZeroShotFusionClassifier(methods=METHODS).fit(bundle)
    p = clf.predict_proba(_views(bundle))
    assert p.shape == (bundle.n_test, 5)
    assert np.max(np.abs(p.sum(axis=1) - 1.0)) < 1e-9


def test_predict_recovers_easy_labels():
    b = generate_synthetic_bundle(5, 6, 16, (0, 0, 0), 3, seed=5)
    clf = ZeroShotFusionClassifier(methods=METHODS).fit(b)
    preds = clf.predict({bb: m.data for bb, m in b.test.items()})
    assert list(preds) == b.labels
    assert clf.score({bb: m.data for bb, m in b.test.items()}, b.labels) == 1.0


def test_single_method_subset_matches_that_method(bundle):
    full = ZeroShotFusionClassifier(methods=METHODS).fit(bundle)
    only_m1 = ZeroShotFusionClassifier(methods=[METHODS[0]]).fit(bundle)
    p = only_m1.predict_proba({"m1": bundle.test["m1"].data})
    # with one method the fusion is the identity on that method's probs
    from zsfuse.fusion import softmax_rows
    from zsfuse.similarity import score_text_image
    expected = softmax_rows(score_text_image(bundle.test["m1"], bundle.text),
                            100.0).values
    assert np.array_equal(p, expected)
    del full


def test_unfitted_predict_raises(bundle):
    clf = ZeroShotFusionClassifier(methods=METHODS)
    with pytest.raises(ValidationError):
        clf.predict(_views(bundle))


def test_missing_view_raises(bundle):
    clf = ZeroShotFusionClassifier(methods=METHODS).fit(bundle)
    with pytest.raises(ValidationError):
        clf.predict({"m1": bundle.test["m1"].data})


def test_fixed_scheme(bundle):
    clf = ZeroShotFusionClassifier(methods=METHODS, scheme="fixed",
                                   fixed_weights={"M1": 3, "M2": 3, "M3": 4})
    p = clf.fit(bundle).predict_proba(_views(bundle))
    assert np.max(np.abs(p.sum(axis=1) - 1.0)) < 1e-9
