"""On-disk data model: binary embedding matrices plus JSON manifests.

Matrices are stored in the "ZSEB" format:

    offset  size  field
    0       4     magic, ASCII "ZSEB"
    4       2     version, u16 little-endian, currently 1
    6       2     flags, u16 little-endian; bit 0 = rows are unit L2 norm,
                  all other bits must be zero
    8       8     rows, u64 little-endian
    16      4     dim, u32 little-endian
    20      ...   rows*dim float32, little-endian, row-major
    end-4   4     CRC-32 (IEEE polynomial) of the payload bytes above

The CRC covers the float payload only; header fields are protected by
their own strict validation (magic, version, zero reserved flags, exact
file length).

Manifests are plain JSON:

``catalog.json``
    ``{"classes": [{"name", "prompt", "split"}, ...]}`` where ``split`` is
    ``"closed"``, ``"open"`` or absent.

``references.json``
    ``{"<backbone>": {"<class>": [row indices], ...}, ...}``

``bundle.json``
    ``{"catalog", "labels", "text", "test": {backbone: path},
    "refs": {backbone: path}, "references"}`` with paths relative to the
    bundle file.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, CorruptionError, FormatError, ValidationError
from .validation import (MIN_ROW_NORM, check_finite, check_no_degenerate_rows,
                         check_rows_normalized)

_MAGIC = b"ZSEB"
_VERSION = 1
_FLAG_NORMALIZED = 0x0001
_HEADER = struct.Struct("<4sHHQI")

DEFAULT_PROMPT = "A photo of {name}"


@dataclass
class EmbeddingMatrix:
    """Dense row-major float32 matrix of feature vectors."""

    data: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def validate(self) -> None:
        if self.data.ndim != 2:
            raise ValidationError(f"embedding matrix must be 2-D, got {self.data.ndim}-D")
        if self.rows < 1 or self.dim < 1:
            raise ValidationError(f"embedding matrix must be non-empty, got {self.data.shape}")
        check_finite(self.data, "embedding matrix")
        if self.normalized:
            check_rows_normalized(self.data, name="embedding matrix")


def write_matrix(m: EmbeddingMatrix, path) -> None:
    """Serialize ``m`` to ``path`` in the ZSEB format.

    Validates first; on a validation failure nothing is written.
    """
    m.validate()
    flags = _FLAG_NORMALIZED if m.normalized else 0
    header = _HEADER.pack(_MAGIC, _VERSION, flags, m.rows, m.dim)
    payload = np.ascontiguousarray(m.data, dtype="<f4").tobytes()
    crc = struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF)
    Path(path).write_bytes(header + payload + crc)


def read_matrix(path) -> EmbeddingMatrix:
    """Read a ZSEB file, verifying structure, CRC and the normalized flag."""
    raw = Path(path).read_bytes()
    if len(raw) < 4 or raw[:4] != _MAGIC:
        raise FormatError(f"{path}: not a ZSEB file (bad magic)")
    if len(raw) < _HEADER.size:
        raise CorruptionError(f"{path}: truncated header")
    _, version, flags, rows, dim = _HEADER.unpack_from(raw)
    if version != _VERSION:
        raise FormatError(f"{path}: unsupported ZSEB version {version}")
    if flags & ~_FLAG_NORMALIZED:
        raise FormatError(f"{path}: unknown flag bits 0x{flags:04x}")
    expected = _HEADER.size + rows * dim * 4 + 4
    if len(raw) != expected:
        raise CorruptionError(
            f"{path}: size {len(raw)} does not match header ({expected} expected)")
    payload = raw[_HEADER.size:-4]
    (crc_stored,) = struct.unpack("<I", raw[-4:])
    if zlib.crc32(payload) & 0xFFFFFFFF != crc_stored:
        raise CorruptionError(f"{path}: CRC mismatch")
    data = np.frombuffer(payload, dtype="<f4").reshape(rows, dim).copy()
    m = EmbeddingMatrix(data, normalized=bool(flags & _FLAG_NORMALIZED))
    m.validate()
    return m


def l2_normalize_rows(m: EmbeddingMatrix) -> EmbeddingMatrix:
    """Return a copy of ``m`` with every row scaled to unit L2 norm."""
    check_finite(m.data, "embedding matrix")
    check_no_degenerate_rows(m.data, MIN_ROW_NORM)
    data = np.asarray(m.data, dtype=np.float64)
    out = data / np.linalg.norm(data, axis=1, keepdims=True)
    return EmbeddingMatrix(out.astype(np.float32), normalized=True)


@dataclass
class ClassEntry:
    name: str
    prompt: str
    split: str | None = None  # "closed" | "open" | None


@dataclass
class ClassCatalog:
    """Ordered class list; list order is the canonical column order."""

    classes: list[ClassEntry]

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        names = [c.name for c in self.classes]
        if not names:
            raise ValidationError("catalog must contain at least one class")
        if any(not n for n in names):
            raise ValidationError("class names must be non-empty")
        if len(set(names)) != len(names):
            raise ValidationError("class names must be unique")
        for c in self.classes:
            if c.split not in (None, "closed", "open"):
                raise ValidationError(f"bad split tag {c.split!r} for class {c.name}")

    @classmethod
    def from_names(cls, names: list[str]) -> "ClassCatalog":
        return cls([ClassEntry(n, DEFAULT_PROMPT.format(name=n)) for n in names])

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.classes]

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ConfigError(f"class {name!r} not in catalog") from None

    def to_dict(self) -> dict:
        out = []
        for c in self.classes:
            entry = {"name": c.name, "prompt": c.prompt}
            if c.split is not None:
                entry["split"] = c.split
            out.append(entry)
        return {"classes": out}

    @classmethod
    def from_dict(cls, d: dict) -> "ClassCatalog":
        return cls([ClassEntry(e["name"],
                               e.get("prompt", DEFAULT_PROMPT.format(name=e["name"])),
                               e.get("split"))
                    for e in d["classes"]])


@dataclass
class ReferenceManifest:
    """Per backbone, per class: row indices into that backbone's reference matrix."""

    indices: dict[str, dict[str, list[int]]] = field(default_factory=dict)

    def backbones(self) -> list[str]:
        return list(self.indices)

    def for_class(self, backbone: str, name: str) -> list[int]:
        try:
            return self.indices[backbone][name]
        except KeyError:
            raise ConfigError(
                f"class {name!r} has no reference indices for backbone {backbone!r}") from None

    def m_per_class(self, backbone: str) -> dict[str, int]:
        return {k: len(v) for k, v in self.indices[backbone].items()}

    def validate_against(self, backbone: str, catalog: ClassCatalog,
                         refs: EmbeddingMatrix) -> None:
        per_class = self.indices.get(backbone)
        if per_class is None:
            raise ConfigError(f"manifest has no entries for backbone {backbone!r}")
        for name in catalog.names:
            idx = per_class.get(name)
            if not idx:
                raise ConfigError(f"class {name!r} has zero references for backbone {backbone!r}")
            for i in idx:
                if not 0 <= i < refs.rows:
                    raise ConfigError(
                        f"reference index {i} for class {name!r} out of range "
                        f"(matrix has {refs.rows} rows)")

    def to_dict(self) -> dict:
        return {bb: dict(per) for bb, per in self.indices.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "ReferenceManifest":
        return cls({bb: {k: list(map(int, v)) for k, v in per.items()}
                    for bb, per in d.items()})


@dataclass
class DatasetBundle:
    """Everything a pipeline run consumes, loaded into memory."""

    catalog: ClassCatalog
    labels: list[str]
    text: EmbeddingMatrix
    test: dict[str, EmbeddingMatrix]
    refs: dict[str, EmbeddingMatrix]
    manifest: ReferenceManifest

    def validate(self) -> None:
        self.catalog.validate()
        self.text.validate()
        if self.text.rows != self.catalog.n_classes:
            raise ValidationError(
                f"text matrix has {self.text.rows} rows, catalog has "
                f"{self.catalog.n_classes} classes")
        counts = {bb: m.rows for bb, m in self.test.items()}
        if len(set(counts.values())) > 1:
            raise ValidationError(f"test matrices disagree on row count: {counts}")
        n_test = next(iter(counts.values()))
        if len(self.labels) != n_test:
            raise ValidationError(
                f"{len(self.labels)} labels for {n_test} test rows")
        known = set(self.catalog.names)
        for lbl in self.labels:
            if lbl not in known:
                raise ValidationError(f"test label {lbl!r} not in catalog")
        for bb, m in self.test.items():
            m.validate()
        for bb, m in self.refs.items():
            m.validate()
            self.manifest.validate_against(bb, self.catalog, m)

    @property
    def n_test(self) -> int:
        return next(iter(self.test.values())).rows


def save_bundle(bundle: DatasetBundle, directory) -> Path:
    """Write a bundle to ``directory`` and return the bundle.json path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "catalog.json").write_text(
        json.dumps(bundle.catalog.to_dict(), indent=2) + "\n")
    (directory / "labels.json").write_text(
        json.dumps({"labels": bundle.labels}, indent=2) + "\n")
    (directory / "references.json").write_text(
        json.dumps(bundle.manifest.to_dict(), indent=2) + "\n")
    write_matrix(bundle.text, directory / "text.zseb")
    index = {
        "catalog": "catalog.json",
        "labels": "labels.json",
        "references": "references.json",
        "text": "text.zseb",
        "test": {},
        "refs": {},
    }
    for bb, m in bundle.test.items():
        fn = f"test_{bb}.zseb"
        write_matrix(m, directory / fn)
        index["test"][bb] = fn
    for bb, m in bundle.refs.items():
        fn = f"refs_{bb}.zseb"
        write_matrix(m, directory / fn)
        index["refs"][bb] = fn
    path = directory / "bundle.json"
    path.write_text(json.dumps(index, indent=2) + "\n")
    return path


def load_bundle(path) -> DatasetBundle:
    """Load and validate a bundle from its bundle.json index."""
    path = Path(path)
    base = path.parent
    index = json.loads(path.read_text())
    catalog = ClassCatalog.from_dict(json.loads((base / index["catalog"]).read_text()))
    labels = json.loads((base / index["labels"]).read_text())["labels"]
    manifest = ReferenceManifest.from_dict(
        json.loads((base / index["references"]).read_text()))
    bundle = DatasetBundle(
        catalog=catalog,
        labels=labels,
        text=read_matrix(base / index["text"]),
        test={bb: read_matrix(base / fn) for bb, fn in index["test"].items()},
        refs={bb: read_matrix(base / fn) for bb, fn in index["refs"].items()},
        manifest=manifest,
    )
    bundle.validate()
    return bundle
