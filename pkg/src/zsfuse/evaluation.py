"""Closed/open-set evaluation: splits, Top-k accuracy, AUROC, reporting.

Also houses a synthetic-bundle generator for desk-scale experiments:
unit-norm class prototypes, per-method Gaussian perturbation, and
independently perturbed reference sets, all driven by one seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .errors import ConfigError, EmptyEvaluationError, ValidationError
from .store import (ClassCatalog, DatasetBundle, EmbeddingMatrix,
                    ReferenceManifest)

REPORT_CSV_HEADER = "method,top1,top3,top5,auroc"


@dataclass
class SplitSpec:
    """Deterministic closed/open partition of the catalog classes.

    Generated by shuffling class names with numpy's default PCG64
    generator seeded from a 64-bit seed and taking the first ``m`` as the
    closed set.
    """

    dataset: str
    m: int
    seed: int
    closed: list[str]
    open: list[str]

    def validate(self, catalog: ClassCatalog | None = None) -> None:
        if set(self.closed) & set(self.open):
            raise ValidationError("closed and open sets overlap")
        if len(self.closed) != self.m:
            raise ValidationError(
                f"split lists {len(self.closed)} closed classes, m={self.m}")
        if catalog is not None:
            if set(self.closed) | set(self.open) != set(catalog.names):
                raise ValidationError("split does not cover the catalog exactly")

    def to_dict(self) -> dict:
        return {"dataset": self.dataset, "m": self.m, "seed": self.seed,
                "closed": self.closed, "open": self.open}

    @classmethod
    def from_dict(cls, d: dict) -> "SplitSpec":
        return cls(d.get("dataset", ""), int(d["m"]), int(d["seed"]),
                   list(d["closed"]), list(d["open"]))


def split_catalog(catalog: ClassCatalog, m: int, seed: int,
                  dataset: str = "") -> SplitSpec:
    """Seeded shuffle of the catalog; first ``m`` names become the closed set."""
    n = catalog.n_classes
    if not 1 <= m < n:
        raise ConfigError(f"m must be in [1, {n - 1}], got {m}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    names = catalog.names
    shuffled = [names[i] for i in order]
    spec = SplitSpec(dataset, m, seed, shuffled[:m], shuffled[m:])
    spec.validate(catalog)
    return spec


def topk_accuracy(p: np.ndarray, labels: list[str], catalog: ClassCatalog,
                  label_space: list[str], k: int) -> float:
    """Fraction of eligible samples whose true label ranks in the top k.

    Only samples whose true label lies in ``label_space`` count, and only
    the ``label_space`` columns compete. Ties rank the lower catalog
    index first. ``k`` larger than the label space trivially scores 1.
    """
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if not label_space:
        raise ConfigError("label_space must be non-empty")
    space = set(label_space)
    cols = [i for i, name in enumerate(catalog.names) if name in space]
    col_name = [catalog.names[i] for i in cols]
    p = np.asarray(p, dtype=np.float64)
    eligible = [t for t, lbl in enumerate(labels) if lbl in space]
    if not eligible:
        raise EmptyEvaluationError("no test samples fall in the label space")
    if k >= len(cols):
        return 1.0
    sub = p[np.ix_(eligible, cols)]
    # stable argsort on -p: equal scores keep ascending catalog order
    order = np.argsort(-sub, axis=1, kind="stable")[:, :k]
    hits = 0
    for row, t in enumerate(eligible):
        true_col = col_name.index(labels[t])
        if true_col in order[row]:
            hits += 1
    return hits / len(eligible)


def auroc(pos_scores, neg_scores) -> float:
    """Mann-Whitney pair statistic: P(pos > neg) with ties counting half.

    Rank-based O((P+Q) log(P+Q)); exactly equal to brute-force pair
    counting since mid-ranks are exact in binary floating point.
    """
    pos = np.asarray(pos_scores, dtype=np.float64).ravel()
    neg = np.asarray(neg_scores, dtype=np.float64).ravel()
    if pos.size == 0 or neg.size == 0:
        raise EmptyEvaluationError("auroc requires non-empty score lists")
    ranks = rankdata(np.concatenate([pos, neg]), method="average")
    u = ranks[:pos.size].sum() - pos.size * (pos.size + 1) / 2.0
    return float(u / (pos.size * neg.size))


def openset_scores(p: np.ndarray, labels: list[str], split: SplitSpec,
                   catalog: ClassCatalog):
    """Max probability over closed-set columns, partitioned by true label."""
    closed = set(split.closed)
    cols = [i for i, name in enumerate(catalog.names) if name in closed]
    if not cols:
        raise ConfigError("split has no closed classes present in the catalog")
    p = np.asarray(p, dtype=np.float64)
    det = p[:, cols].max(axis=1)
    pos = [det[t] for t, lbl in enumerate(labels) if lbl in closed]
    neg = [det[t] for t, lbl in enumerate(labels) if lbl not in closed]
    if not pos or not neg:
        raise EmptyEvaluationError(
            "test set lacks closed-set or open-set samples for this split")
    return np.asarray(pos), np.asarray(neg)


def generate_synthetic_bundle(n_classes: int, samples_per_class: int, dim: int,
                              noise_per_method, m_refs: int,
                              seed: int) -> DatasetBundle:
    """Deterministic three-method synthetic dataset.

    Each method lives in its own embedding space (backbones "m1", "m2",
    "m3"): unit prototypes are drawn once per space, test rows are
    prototype + per-component Gaussian noise of that method's scale
    (re-normalized), text anchors are method 1's prototypes, and methods
    2/3 carry ``m_refs`` independently noised references per class.
    """
    noise = tuple(float(x) for x in noise_per_method)
    if n_classes < 1 or samples_per_class < 1 or m_refs < 1:
        raise ConfigError("counts must be >= 1")
    if dim < 2:
        raise ConfigError(f"dim must be >= 2, got {dim}")
    if len(noise) != 3 or any(s < 0 for s in noise):
        raise ConfigError("noise_per_method must be three non-negative scalars")

    rng = np.random.default_rng(seed)
    names = [f"class_{i:02d}" for i in range(n_classes)]
    catalog = ClassCatalog.from_names(names)
    labels = [names[c] for c in range(n_classes) for _ in range(samples_per_class)]
    t = len(labels)
    lab_idx = np.repeat(np.arange(n_classes), samples_per_class)

    def unit(x):
        return x / np.linalg.norm(x, axis=-1, keepdims=True)

    protos = {bb: unit(rng.normal(size=(n_classes, dim)))
              for bb in ("m1", "m2", "m3")}
    test = {}
    for bb, sigma in zip(("m1", "m2", "m3"), noise):
        pts = protos[bb][lab_idx] + sigma * rng.normal(size=(t, dim))
        test[bb] = EmbeddingMatrix(unit(pts).astype(np.float32), normalized=True)

    refs = {}
    manifest = ReferenceManifest({})
    for bb, sigma in zip(("m2", "m3"), noise[1:]):
        rows = protos[bb][np.repeat(np.arange(n_classes), m_refs)]
        rows = unit(rows + sigma * rng.normal(size=(n_classes * m_refs, dim)))
        refs[bb] = EmbeddingMatrix(rows.astype(np.float32), normalized=True)
        manifest.indices[bb] = {
            names[c]: list(range(c * m_refs, (c + 1) * m_refs))
            for c in range(n_classes)}

    bundle = DatasetBundle(
        catalog=catalog, labels=labels,
        text=EmbeddingMatrix(protos["m1"].astype(np.float32), normalized=True),
        test=test, refs=refs, manifest=manifest)
    bundle.validate()
    return bundle


@dataclass
class MethodMetrics:
    top1: float
    top3: float
    top5: float
    auroc: float

    def __post_init__(self):
        # stored pre-rounded so emitted 6-decimal text parses back losslessly
        self.top1 = round(float(self.top1), 6)
        self.top3 = round(float(self.top3), 6)
        self.top5 = round(float(self.top5), 6)
        self.auroc = round(float(self.auroc), 6)
        if not 0 <= self.top1 <= self.top3 <= self.top5 <= 1:
            raise ValidationError("top-k metrics must satisfy 0<=top1<=top3<=top5<=1")
        if not 0 <= self.auroc <= 1:
            raise ValidationError("AUROC must lie in [0, 1]")


@dataclass
class EvalReport:
    methods: dict[str, MethodMetrics]
    fused: MethodMetrics
    counts: dict[str, int]
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "methods": {k: vars(v) for k, v in self.methods.items()},
            "fused": vars(self.fused),
            "counts": dict(self.counts),
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(
            methods={k: MethodMetrics(**v) for k, v in d["methods"].items()},
            fused=MethodMetrics(**d["fused"]),
            counts={k: int(v) for k, v in d["counts"].items()},
            config=d.get("config", {}),
        )


def _json_value(v, indent: int) -> str:
    pad = " " * indent
    if isinstance(v, float):
        return f"{v:.6f}"
    if isinstance(v, bool) or v is None or isinstance(v, (int, str)):
        return json.dumps(v)
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [f'{pad}  {json.dumps(str(k))}: {_json_value(val, indent + 2)}'
                 for k, val in v.items()]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(v, (list, tuple)):
        if not v:
            return "[]"
        items = [f"{pad}  {_json_value(x, indent + 2)}" for x in v]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def format_report_json(report: EvalReport) -> str:
    """JSON text with stable key order and fixed 6-decimal floats."""
    return _json_value(report.to_dict(), 0) + "\n"


def format_report_csv(report: EvalReport) -> str:
    """One row per method plus the fused row; header is fixed."""
    lines = [REPORT_CSV_HEADER]
    for name, mm in report.methods.items():
        lines.append(f"{name},{mm.top1:.6f},{mm.top3:.6f},{mm.top5:.6f},{mm.auroc:.6f}")
    mm = report.fused
    lines.append(f"fused,{mm.top1:.6f},{mm.top3:.6f},{mm.top5:.6f},{mm.auroc:.6f}")
    return "\n".join(lines) + "\n"


def emit_report(report: EvalReport, fmt: str, path) -> None:
    if fmt == "json":
        text = format_report_json(report)
    elif fmt == "csv":
        text = format_report_csv(report)
    else:
        raise ConfigError(f"unknown report format {fmt!r}")
    Path(path).write_text(text)


def parse_report_json(text: str) -> EvalReport:
    return EvalReport.from_dict(json.loads(text))
