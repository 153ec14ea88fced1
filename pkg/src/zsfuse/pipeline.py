"""Config-driven orchestration: load -> score -> calibrate -> fuse -> evaluate.

Every stage boundary value is round-tripped through float32, exactly what
the ZSEB intermediate files hold, so running the stages separately
through files produces byte-identical reports to an in-memory run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .evaluation import (EvalReport, MethodMetrics, SplitSpec, auroc,
                         emit_report, openset_scores, split_catalog,
                         topk_accuracy)
from .fusion import FusionConfig, ProbMatrix, confidence, fuse, softmax_rows
from .similarity import ScoreMatrix, score_image_image, score_text_image
from .store import (DatasetBundle, EmbeddingMatrix, load_bundle, read_matrix,
                    write_matrix)

METHOD_KINDS = ("text_image", "image_image")


@dataclass
class MethodSpec:
    name: str
    kind: str
    backbone: str

    def validate(self) -> None:
        if self.kind not in METHOD_KINDS:
            raise ConfigError(f"method {self.name}: unknown kind {self.kind!r}")


@dataclass
class PipelineConfig:
    bundle_path: Path
    methods: list[MethodSpec]
    fusion: FusionConfig = field(default_factory=FusionConfig)
    split_m: int | None = None
    split_seed: int = 0
    split_file: Path | None = None
    label_space: str = "closed"
    report_format: str = "json"
    report_path: Path | None = None

    def validate(self) -> None:
        if not self.methods:
            raise ConfigError("at least one method must be included")
        for m in self.methods:
            m.validate()
        self.fusion.validate()
        if self.label_space not in ("closed", "full"):
            raise ConfigError(f"label_space must be closed|full, got {self.label_space!r}")
        if self.split_file is None and self.split_m is None:
            raise ConfigError("config needs either split.m/seed or split.file")
        if self.report_format not in ("json", "csv"):
            raise ConfigError(f"report format must be json|csv, got {self.report_format!r}")


def load_config(path) -> PipelineConfig:
    path = Path(path)
    base = path.parent
    raw = json.loads(path.read_text())
    include = raw.get("include") or sorted(raw["methods"])
    methods = []
    for name in include:
        try:
            spec = raw["methods"][name]
        except KeyError:
            raise ConfigError(f"included method {name!r} not defined") from None
        methods.append(MethodSpec(name, spec["kind"], spec["backbone"]))
    fz = raw.get("fusion", {})
    fusion = FusionConfig(
        scheme=fz.get("scheme", "inv_entropy"),
        temperatures={k: float(v) for k, v in fz.get("temperatures", {}).items()},
        fixed_weights=fz.get("fixed_weights"),
        epsilon=float(fz.get("epsilon", 1e-6)),
    )
    split = raw.get("split", {})
    report = raw.get("report", {})
    cfg = PipelineConfig(
        bundle_path=base / raw["bundle"],
        methods=methods,
        fusion=fusion,
        split_m=split.get("m"),
        split_seed=int(split.get("seed", 0)),
        split_file=(base / split["file"]) if "file" in split else None,
        label_space=raw.get("label_space", "closed"),
        report_format=report.get("format", "json"),
        report_path=(base / report["path"]) if "path" in report else None,
    )
    cfg.validate()
    return cfg


def _f32(values: np.ndarray) -> np.ndarray:
    # stage-boundary rounding: identical to a ZSEB write/read round trip
    return np.asarray(values, dtype=np.float32).astype(np.float64)


def compute_scores(bundle: DatasetBundle, methods: list[MethodSpec]) -> dict[str, ScoreMatrix]:
    out = {}
    for spec in methods:
        try:
            test = bundle.test[spec.backbone]
        except KeyError:
            raise ConfigError(
                f"method {spec.name}: bundle has no test matrix for "
                f"backbone {spec.backbone!r}") from None
        if spec.kind == "text_image":
            sm = score_text_image(test, bundle.text)
        else:
            try:
                refs = bundle.refs[spec.backbone]
            except KeyError:
                raise ConfigError(
                    f"method {spec.name}: bundle has no references for "
                    f"backbone {spec.backbone!r}") from None
            sm = score_image_image(test, refs, bundle.manifest, spec.backbone,
                                   bundle.catalog)
        out[spec.name] = ScoreMatrix(_f32(sm.values), sm.method)
    return out


def calibrate_scores(scores: dict[str, ScoreMatrix],
                     fusion: FusionConfig) -> dict[str, ProbMatrix]:
    out = {}
    for name, sm in scores.items():
        pm = softmax_rows(sm, fusion.temperature_for(name))
        out[name] = ProbMatrix(_f32(pm.values), pm.method, pm.temperature)
    return out


def fuse_methods(probs: dict[str, ProbMatrix], fusion: FusionConfig) -> ProbMatrix:
    names = list(probs)
    if fusion.scheme == "fixed":
        weights = []
        for name in names:
            if name not in fusion.fixed_weights:
                raise ConfigError(f"fixed_weights missing method {name!r}")
            weights.append(float(fusion.fixed_weights[name]))
    else:
        weights = [confidence(probs[n], fusion.scheme, fusion.epsilon) for n in names]
    fused = fuse([probs[n] for n in names], weights)
    return ProbMatrix(_f32(fused.values), fused.method, fused.temperature)


def resolve_split(config: PipelineConfig, bundle: DatasetBundle) -> SplitSpec:
    if config.split_file is not None:
        spec = SplitSpec.from_dict(json.loads(Path(config.split_file).read_text()))
        spec.validate(bundle.catalog)
        return spec
    return split_catalog(bundle.catalog, config.split_m, config.split_seed)


def _metrics(p: np.ndarray, bundle: DatasetBundle, split: SplitSpec,
             label_space: list[str]) -> MethodMetrics:
    ks = {k: topk_accuracy(p, bundle.labels, bundle.catalog, label_space, k)
          for k in (1, 3, 5)}
    pos, neg = openset_scores(p, bundle.labels, split, bundle.catalog)
    return MethodMetrics(ks[1], ks[3], ks[5], auroc(pos, neg))


def evaluate_probs(probs: dict[str, ProbMatrix], fused: ProbMatrix,
                   bundle: DatasetBundle, split: SplitSpec,
                   label_space_mode: str, config_echo: dict) -> EvalReport:
    space = split.closed if label_space_mode == "closed" else bundle.catalog.names
    closed = set(split.closed)
    counts = {
        "test": bundle.n_test,
        "classes": bundle.catalog.n_classes,
        "closed_classes": split.m,
        "closed_samples": sum(1 for lbl in bundle.labels if lbl in closed),
        "open_samples": sum(1 for lbl in bundle.labels if lbl not in closed),
    }
    return EvalReport(
        methods={n: _metrics(p.values, bundle, split, space) for n, p in probs.items()},
        fused=_metrics(fused.values, bundle, split, space),
        counts=counts,
        config=config_echo,
    )


def config_echo(config: PipelineConfig, bundle: DatasetBundle,
                split: SplitSpec) -> dict:
    echo = {
        "methods": [vars(m) for m in config.methods],
        "scheme": config.fusion.scheme,
        "temperatures": {m.name: config.fusion.temperature_for(m.name)
                         for m in config.methods},
        "epsilon": config.fusion.epsilon,
        "label_space": config.label_space,
        "split": {"m": split.m, "seed": split.seed},
        "m_per_class": {bb: bundle.manifest.m_per_class(bb)
                        for bb in bundle.manifest.backbones()},
    }
    if config.fusion.scheme == "fixed":
        echo["fixed_weights"] = {k: float(v)
                                 for k, v in config.fusion.fixed_weights.items()}
    return echo


def run_pipeline(config: PipelineConfig) -> EvalReport:
    """Full in-memory run; writes the report only after everything succeeds."""
    config.validate()
    bundle = load_bundle(config.bundle_path)
    split = resolve_split(config, bundle)
    scores = compute_scores(bundle, config.methods)
    probs = calibrate_scores(scores, config.fusion)
    fused = fuse_methods(probs, config.fusion)
    report = evaluate_probs(probs, fused, bundle, split, config.label_space,
                            config_echo(config, bundle, split))
    if config.report_path is not None:
        emit_report(report, config.report_format, config.report_path)
    return report


# -- stage persistence ------------------------------------------------------
# Intermediate matrices reuse the ZSEB format with a JSON sidecar tag.

def save_stage_matrix(values: np.ndarray, meta: dict, directory, stem: str) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_matrix(EmbeddingMatrix(np.asarray(values, dtype=np.float32)),
                 directory / f"{stem}.zseb")
    (directory / f"{stem}.json").write_text(json.dumps(meta, indent=2) + "\n")


def load_stage_matrix(directory, stem: str):
    directory = Path(directory)
    m = read_matrix(directory / f"{stem}.zseb")
    meta = json.loads((directory / f"{stem}.json").read_text())
    return m.data.astype(np.float64), meta


def run_score_stage(config: PipelineConfig, out_dir) -> None:
    bundle = load_bundle(config.bundle_path)
    for name, sm in compute_scores(bundle, config.methods).items():
        save_stage_matrix(sm.values, {"method": name, "tag": sm.method,
                                      "stage": "score"}, out_dir, f"scores_{name}")


def run_fuse_stage(config: PipelineConfig, scores_dir, out_dir) -> None:
    probs = {}
    for spec in config.methods:
        values, meta = load_stage_matrix(scores_dir, f"scores_{spec.name}")
        sm = ScoreMatrix(values, meta["tag"])
        pm = softmax_rows(sm, config.fusion.temperature_for(spec.name))
        probs[spec.name] = ProbMatrix(_f32(pm.values), pm.method, pm.temperature)
    fused = fuse_methods(probs, config.fusion)
    for name, pm in probs.items():
        save_stage_matrix(pm.values, {"method": name, "tag": pm.method,
                                      "temperature": pm.temperature,
                                      "stage": "probs"}, out_dir, f"probs_{name}")
    save_stage_matrix(fused.values, {"scheme": config.fusion.scheme,
                                     "methods": list(probs),
                                     "stage": "fused"}, out_dir, "fused")


def run_eval_stage(config: PipelineConfig, probs_dir) -> EvalReport:
    bundle = load_bundle(config.bundle_path)
    split = resolve_split(config, bundle)
    probs = {}
    for spec in config.methods:
        values, meta = load_stage_matrix(probs_dir, f"probs_{spec.name}")
        probs[spec.name] = ProbMatrix(values, meta["tag"], meta["temperature"])
    fused_values, _ = load_stage_matrix(probs_dir, "fused")
    fused = ProbMatrix(fused_values, "fused", 0.0)
    report = evaluate_probs(probs, fused, bundle, split, config.label_space,
                            config_echo(config, bundle, split))
    if config.report_path is not None:
        emit_report(report, config.report_format, config.report_path)
    return report
