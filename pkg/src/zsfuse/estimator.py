"""Scikit-learn flavored front door for the fusion classifier.

``ZeroShotFusionClassifier`` follows the estimator conventions
(``get_params``/``set_params``, ``fit`` returns ``self``, fitted state in
trailing-underscore attributes) so it slots into sklearn tooling. Because
the model is zero-shot and multi-view, ``fit`` consumes class anchors (a
DatasetBundle or its pieces) rather than labelled training rows, and
``predict``/``predict_proba`` take a mapping of backbone id to embedding
array for the same samples.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .errors import ConfigError, ValidationError
from .fusion import FusionConfig, ProbMatrix, confidence, fuse, softmax_rows
from .pipeline import MethodSpec
from .similarity import score_image_image, score_text_image
from .store import DatasetBundle, EmbeddingMatrix
from .validation import as_2d_float


class ZeroShotFusionClassifier(BaseEstimator, ClassifierMixin):
    """Confidence-weighted fusion of cosine-alignment scorers.

    Parameters
    ----------
    methods : list of (name, kind, backbone) triples; kind is
        ``"text_image"`` or ``"image_image"``.
    scheme : confidence scheme, one of ``max``, ``inv_entropy``,
        ``neg_exp_entropy``, ``fixed``.
    temperature : softmax temperature applied to every method, or a dict
        keyed by method name.
    fixed_weights : per-method weights, required for ``scheme="fixed"``.
    epsilon : denominator guard for ``inv_entropy``.
    """

    def __init__(self, methods=None, scheme="inv_entropy", temperature=100.0,
                 fixed_weights=None, epsilon=1e-6):
        self.methods = methods
        self.scheme = scheme
        self.temperature = temperature
        self.fixed_weights = fixed_weights
        self.epsilon = epsilon

    def _fusion_config(self) -> FusionConfig:
        if isinstance(self.temperature, dict):
            temps = {k: float(v) for k, v in self.temperature.items()}
        else:
            temps = {spec.name: float(self.temperature) for spec in self._specs()}
        cfg = FusionConfig(scheme=self.scheme, temperatures=temps,
                           fixed_weights=self.fixed_weights, epsilon=self.epsilon)
        cfg.validate()
        return cfg

    def _specs(self) -> list[MethodSpec]:
        if not self.methods:
            raise ConfigError("methods must list at least one (name, kind, backbone)")
        return [MethodSpec(*m) for m in self.methods]

    def fit(self, anchors: DatasetBundle, y=None):
        """Register class anchors (text and reference embeddings)."""
        specs = self._specs()
        for spec in specs:
            spec.validate()
        self._fusion_config()
        anchors.catalog.validate()
        self.catalog_ = anchors.catalog
        self.text_ = anchors.text
        self.refs_ = anchors.refs
        self.manifest_ = anchors.manifest
        self.classes_ = np.asarray(anchors.catalog.names)
        return self

    def _check_fitted(self):
        if not hasattr(self, "classes_"):
            raise ValidationError("estimator is not fitted")

    def _views(self, X) -> dict[str, EmbeddingMatrix]:
        if not isinstance(X, dict):
            raise ValidationError(
                "X must map backbone id to an embedding array, one per view")
        return {bb: EmbeddingMatrix(as_2d_float(arr, f"view {bb!r}").astype(np.float32))
                for bb, arr in X.items()}

    def predict_proba(self, X) -> np.ndarray:
        """Fused class distribution for each sample in the multi-view input."""
        self._check_fitted()
        views = self._views(X)
        cfg = self._fusion_config()
        probs: dict[str, ProbMatrix] = {}
        for spec in self._specs():
            if spec.backbone not in views:
                raise ValidationError(f"X is missing view {spec.backbone!r}")
            test = views[spec.backbone]
            if spec.kind == "text_image":
                sm = score_text_image(test, self.text_)
            else:
                sm = score_image_image(test, self.refs_[spec.backbone],
                                       self.manifest_, spec.backbone, self.catalog_)
            probs[spec.name] = softmax_rows(sm, cfg.temperature_for(spec.name))
        names = list(probs)
        if cfg.scheme == "fixed":
            weights = [float(cfg.fixed_weights[n]) for n in names]
        else:
            weights = [confidence(probs[n], cfg.scheme, cfg.epsilon) for n in names]
        return fuse([probs[n] for n in names], weights).values

    def predict(self, X) -> np.ndarray:
        """Class name with the highest fused probability (lower index wins ties)."""
        p = self.predict_proba(X)
        return self.classes_[np.argmax(p, axis=1)]

    def score(self, X, y) -> float:
        y = np.asarray(y)
        return float(np.mean(self.predict(X) == y))
