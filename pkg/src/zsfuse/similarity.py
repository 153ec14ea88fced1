"""Cosine alignment scoring: test embeddings against class anchors.

Three scorers share one ScoreMatrix shape (test rows x catalog classes):
text anchors (one prompt embedding per class) and per-class reference
image sets averaged per Eq.-style mean-of-cosines. All arithmetic is
float64; scores are clamped to [-1, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .store import ClassCatalog, EmbeddingMatrix, ReferenceManifest
from .validation import MIN_ROW_NORM, check_finite, check_no_degenerate_rows

TEXT_IMAGE_CLIP = "text_image_clip"
IMAGE_IMAGE_CLIP = "image_image_clip"
IMAGE_IMAGE_DINO = "image_image_dino"


@dataclass
class ScoreMatrix:
    """Raw cosine scores, one row per test sample, one column per class."""

    values: np.ndarray  # float64, (T, N)
    method: str

    def validate(self) -> None:
        check_finite(self.values, "score matrix")
        if np.any(self.values < -1 - 1e-6) or np.any(self.values > 1 + 1e-6):
            raise ValidationError("score matrix has entries outside [-1, 1]")


def _unit_rows(m: EmbeddingMatrix, what: str) -> np.ndarray:
    data = np.asarray(m.data, dtype=np.float64)
    check_finite(data, what)
    check_no_degenerate_rows(data, MIN_ROW_NORM)
    return data / np.linalg.norm(data, axis=1, keepdims=True)


def cosine(a, b) -> float:
    """Cosine similarity of two vectors, clamped to [-1, 1]."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < MIN_ROW_NORM or nb < MIN_ROW_NORM:
        raise ValidationError("cosine undefined for (near-)zero vector")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def score_text_image(test: EmbeddingMatrix, text: EmbeddingMatrix,
                     method: str = TEXT_IMAGE_CLIP) -> ScoreMatrix:
    """Cosine of every test row against every class-prompt embedding."""
    if test.dim != text.dim:
        raise ValidationError(
            f"dimension mismatch: test dim {test.dim}, text dim {text.dim}")
    s = _unit_rows(test, "test matrix") @ _unit_rows(text, "text matrix").T
    return ScoreMatrix(np.clip(s, -1.0, 1.0), method)


def score_image_image(test: EmbeddingMatrix, refs: EmbeddingMatrix,
                      manifest: ReferenceManifest, backbone: str,
                      catalog: ClassCatalog, method: str | None = None) -> ScoreMatrix:
    """Per class: mean cosine of the test row against that class's references.

    References are taken in manifest order; reference counts may vary by
    class. Accumulation is float64.
    """
    if test.dim != refs.dim:
        raise ValidationError(
            f"dimension mismatch: test dim {test.dim}, refs dim {refs.dim}")
    manifest.validate_against(backbone, catalog, refs)
    test_u = _unit_rows(test, "test matrix")
    refs_u = _unit_rows(refs, "reference matrix")
    out = np.empty((test.rows, catalog.n_classes), dtype=np.float64)
    for col, name in enumerate(catalog.names):
        idx = manifest.for_class(backbone, name)
        per_ref = np.clip(test_u @ refs_u[idx].T, -1.0, 1.0)
        out[:, col] = per_ref.mean(axis=1)
    return ScoreMatrix(np.clip(out, -1.0, 1.0), method or f"image_image_{backbone}")
