"""Score calibration, per-sample confidence weighting, and fusion.

Raw cosine scores are softmax-calibrated (with a temperature multiplier)
into per-row distributions, a confidence weight is derived per row and
method, and the methods are combined as a per-row convex combination.

Confidence schemes:
    max              highest calibrated probability in the row
    inv_entropy      1 / (H + epsilon), H the row's natural-log entropy
    neg_exp_entropy  exp(-H)
    fixed            constant per-method weights (e.g. 1:1:1 or 3:3:4)

Weight triples are normalized to sum to 1 per row before mixing, so the
fused output stays a distribution and common positive rescaling of a
row's weights never changes the result.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ValidationError
from .similarity import ScoreMatrix
from .validation import check_finite, check_prob_rows

SCHEMES = ("max", "inv_entropy", "neg_exp_entropy", "fixed")
DEFAULT_TEMPERATURE = 100.0
DEFAULT_EPSILON = 1e-6


@dataclass
class ProbMatrix:
    """Softmax-calibrated distributions, one row per test sample."""

    values: np.ndarray  # float64, (T, N), rows sum to 1
    method: str
    temperature: float

    def validate(self) -> None:
        check_finite(self.values, "probability matrix")
        check_prob_rows(self.values)


@dataclass
class ConfidenceVector:
    """One non-negative weight per test sample for one method."""

    values: np.ndarray  # float64, (T,)
    scheme: str

    def validate(self) -> None:
        check_finite(self.values, "confidence vector")
        if np.any(self.values < 0):
            raise ValidationError("confidence weights must be non-negative")


@dataclass
class FusionConfig:
    scheme: str = "inv_entropy"
    temperatures: dict[str, float] = field(default_factory=dict)
    fixed_weights: dict[str, float] | None = None
    epsilon: float = DEFAULT_EPSILON

    def validate(self) -> None:
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown confidence scheme {self.scheme!r}")
        for name, t in self.temperatures.items():
            if not t > 0:
                raise ConfigError(f"temperature for {name} must be > 0, got {t}")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be > 0")
        if self.scheme == "fixed":
            if not self.fixed_weights:
                raise ConfigError("fixed scheme requires fixed_weights")
            w = list(self.fixed_weights.values())
            if any(v < 0 for v in w) or sum(w) <= 0:
                raise ConfigError("fixed weights must be >= 0 with positive sum")

    def temperature_for(self, method: str) -> float:
        return self.temperatures.get(method, DEFAULT_TEMPERATURE)


def softmax_rows(s: ScoreMatrix, temperature: float) -> ProbMatrix:
    """Row-wise softmax of temperature-scaled scores, max-subtracted."""
    if not temperature > 0:
        raise ConfigError(f"temperature must be positive, got {temperature}")
    logits = temperature * np.asarray(s.values, dtype=np.float64)
    check_finite(logits, "score matrix")
    logits -= logits.max(axis=1, keepdims=True)
    e = np.exp(logits)
    p = e / e.sum(axis=1, keepdims=True)
    return ProbMatrix(p, s.method, float(temperature))


def entropy(p) -> float:
    """Natural-log entropy of one probability row; 0*log(0) counts as 0."""
    p = np.asarray(p, dtype=np.float64).ravel()
    if np.any(p < 0):
        raise ValidationError("entropy requires non-negative entries")
    if abs(p.sum() - 1.0) > 1e-6:
        raise ValidationError(f"entropy row sums to {p.sum():.9g}, expected 1")
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def entropy_rows(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    return -terms.sum(axis=1)


def confidence(p: ProbMatrix, scheme: str,
               epsilon: float = DEFAULT_EPSILON) -> ConfidenceVector:
    """Per-row confidence weight for one method's calibrated distribution."""
    vals = np.asarray(p.values, dtype=np.float64)
    check_finite(vals, "probability matrix")
    check_prob_rows(vals)
    if scheme == "max":
        w = vals.max(axis=1)
    elif scheme == "inv_entropy":
        w = 1.0 / (entropy_rows(vals) + epsilon)
    elif scheme == "neg_exp_entropy":
        w = np.exp(-entropy_rows(vals))
    else:
        raise ConfigError(f"unknown confidence scheme {scheme!r}")
    return ConfidenceVector(w, scheme)


def fuse(probs: list[ProbMatrix], weights: list) -> ProbMatrix:
    """Per-row convex combination of method distributions.

    ``weights`` holds one entry per method: either a ConfidenceVector or a
    scalar applied to every row. Per-row weights are normalized to sum
    to 1 before mixing.
    """
    if not probs or len(probs) != len(weights):
        raise ConfigError("fuse needs one weight per probability matrix")
    shape = probs[0].values.shape
    for p in probs:
        if p.values.shape != shape:
            raise ValidationError(
                f"shape mismatch: {p.method} is {p.values.shape}, expected {shape}")
    t = shape[0]
    w = np.empty((len(probs), t), dtype=np.float64)
    for k, wk in enumerate(weights):
        col = wk.values if isinstance(wk, ConfidenceVector) else np.full(t, float(wk))
        if col.shape != (t,):
            raise ValidationError("confidence vector length does not match test rows")
        if np.any(col < 0) or not np.all(np.isfinite(col)):
            raise ValidationError("fusion weights must be finite and non-negative")
        w[k] = col
    totals = w.sum(axis=0)
    bad = np.nonzero(totals <= 0)[0]
    if bad.size:
        raise ValidationError(f"all-zero weight triple at row {int(bad[0])}")
    w /= totals
    out = np.zeros(shape, dtype=np.float64)
    for k, p in enumerate(probs):
        out += w[k][:, None] * np.asarray(p.values, dtype=np.float64)
    return ProbMatrix(out, "fused", probs[0].temperature)
