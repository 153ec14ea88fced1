"""Confidence-weighted multi-method zero-shot classification engine."""

from .errors import (ConfigError, CorruptionError, DegenerateRowError,
                     EmptyEvaluationError, FormatError, ValidationError,
                     ZsfuseError)
from .estimator import ZeroShotFusionClassifier
from .evaluation import (EvalReport, MethodMetrics, SplitSpec, auroc,
                         emit_report, generate_synthetic_bundle,
                         openset_scores, split_catalog, topk_accuracy)
from .fusion import (ConfidenceVector, FusionConfig, ProbMatrix, confidence,
                     entropy, fuse, softmax_rows)
from .pipeline import PipelineConfig, load_config, run_pipeline
from .similarity import (ScoreMatrix, cosine, score_image_image,
                         score_text_image)
from .store import (ClassCatalog, ClassEntry, DatasetBundle, EmbeddingMatrix,
                    ReferenceManifest, l2_normalize_rows, load_bundle,
                    read_matrix, save_bundle, write_matrix)

__version__ = "0.1.0"
