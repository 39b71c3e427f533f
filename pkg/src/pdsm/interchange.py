"""Shared domain types and bit-exact file I/O.

Matrices travel as a restricted NPY v1.0 subset: C-order, 1 or 2
dimensions, little-endian float32/float64 payloads.  Dataset manifests
are JSON with stable key order so that identical runs produce identical
bytes.
"""

from __future__ import annotations

import ast
import json
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    FormatError,
    UnsupportedLayoutError,
    UnsupportedVersionError,
    ValidationError,
)

MAGIC = b"\x93NUMPY"

METHOD_IDS = ("gradient", "grad_input", "ig", "gradshap", "guided_bp", "deeplift")

#: Label of the silence pseudo-phoneme used throughout the synthetic vocab.
SILENCE_LABEL = "<>"


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

def _require_finite(a, name):
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} must be finite (no NaN/Inf)")


@dataclass
class Spectrogram:
    """Nonnegative F x T energy matrix, the classifier input domain."""

    data: np.ndarray
    sample_id: str = ""

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2 or min(self.data.shape) < 1:
            raise ValidationError("spectrogram must be a 2-D matrix with F, T >= 1")
        _require_finite(self.data, "spectrogram")
        if np.any(self.data < 0):
            raise ValidationError("spectrogram entries must be >= 0")

    @property
    def shape(self):
        return self.data.shape


@dataclass
class SaliencyMap:
    """F x T attribution scores produced by one method for one class."""

    data: np.ndarray
    method_id: str = "gradient"
    target_class: int = 1

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise ValidationError("saliency map must be a 2-D matrix")
        _require_finite(self.data, "saliency map")
        if self.method_id not in METHOD_IDS:
            raise ValidationError(f"unknown method_id {self.method_id!r}")

    @property
    def shape(self):
        return self.data.shape


@dataclass
class Posteriorgram:
    """N x T' nonnegative score matrix over a phoneme vocabulary.

    Columns need not sum to one; only the per-column argmax is consumed
    downstream, so raw logits shifted to be nonnegative are acceptable.
    """

    data: np.ndarray
    vocab: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2 or self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise ValidationError("posteriorgram must be a 2-D matrix with N, T >= 1")
        _require_finite(self.data, "posteriorgram")
        if np.any(self.data < 0):
            raise ValidationError("posteriorgram entries must be >= 0")
        if self.vocab and len(self.vocab) != self.data.shape[0]:
            raise ValidationError("vocab length must equal the number of rows")

    @property
    def n_phonemes(self):
        return self.data.shape[0]

    @property
    def n_frames(self):
        return self.data.shape[1]


@dataclass(frozen=True)
class Segment:
    """One run of a single phoneme over the half-open frame span [start, end)."""

    phoneme_id: int
    start: int
    end: int


@dataclass
class PhonemeSegmentation:
    """Ordered run-length partition of [0, total_frames) into phoneme spans."""

    segments: list[Segment]
    total_frames: int

    def __post_init__(self):
        segs = self.segments
        if not segs:
            raise ValidationError("segmentation must contain at least one segment")
        if segs[0].start != 0:
            raise ValidationError("first segment must start at frame 0")
        if segs[-1].end != self.total_frames:
            raise ValidationError("last segment must end at total_frames")
        for i, s in enumerate(segs):
            if s.end <= s.start:
                raise ValidationError(f"segment {i} is empty: {s}")
            if i > 0:
                if segs[i - 1].end != s.start:
                    raise ValidationError(f"segments {i - 1} and {i} do not abut")
                if segs[i - 1].phoneme_id == s.phoneme_id:
                    raise ValidationError(
                        f"segments {i - 1} and {i} repeat phoneme {s.phoneme_id}"
                    )

    def __len__(self):
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    def __eq__(self, other):
        return (
            isinstance(other, PhonemeSegmentation)
            and self.total_frames == other.total_frames
            and self.segments == other.segments
        )


@dataclass
class DiscretizedMask:
    """Binary F x T mask whose on-columns are a union of phoneme spans."""

    data: np.ndarray
    selected: frozenset = frozenset()
    k_requested: int = 0

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise ValidationError("mask must be a 2-D matrix")
        if not np.all((self.data == 0.0) | (self.data == 1.0)):
            raise ValidationError("mask entries must be 0 or 1")
        col_on = self.data.max(axis=0)
        col_any = self.data.min(axis=0)
        if np.any(col_on != col_any):
            raise ValidationError("mask columns must be all-0 or all-1")
        self.selected = frozenset(self.selected)

    @property
    def column_indicator(self):
        """Length-T 0/1 vector: 1 where the column is on."""
        return self.data[0] if self.data.shape[0] else np.zeros(self.data.shape[1])


# ---------------------------------------------------------------------------
# NPY v1.0 subset
# ---------------------------------------------------------------------------

_DESCRS = {"<f4": np.dtype("<f4"), "<f8": np.dtype("<f8")}


def load_matrix(path) -> np.ndarray:
    """Load a 1-D or 2-D real matrix from the NPY v1.0 subset.

    Values are widened to float64; widening from float32 is exact.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < 10:
        raise FormatError("file too short for an NPY header", offset=len(buf))
    if buf[:6] != MAGIC:
        raise FormatError("bad magic; not an NPY file", offset=0)
    major, minor = buf[6], buf[7]
    if (major, minor) != (1, 0):
        raise UnsupportedVersionError(
            f"unsupported NPY version {major}.{minor}; only 1.0 is accepted", offset=6
        )
    (hlen,) = struct.unpack_from("<H", buf, 8)
    hstart, hend = 10, 10 + hlen
    if len(buf) < hend:
        raise FormatError("truncated header", offset=len(buf))
    try:
        header = ast.literal_eval(buf[hstart:hend].decode("ascii").strip())
    except (ValueError, SyntaxError, UnicodeDecodeError) as exc:
        raise FormatError(f"unparseable header: {exc}", offset=hstart) from None
    if not isinstance(header, dict) or set(header) != {"descr", "fortran_order", "shape"}:
        raise FormatError("header must carry exactly descr/fortran_order/shape", offset=hstart)
    descr = header["descr"]
    if descr not in _DESCRS:
        raise UnsupportedLayoutError(f"unsupported descr {descr!r}", offset=hstart)
    if header["fortran_order"] is not False:
        raise UnsupportedLayoutError("Fortran-order arrays are not supported", offset=hstart)
    shape = header["shape"]
    if (
        not isinstance(shape, tuple)
        or not 1 <= len(shape) <= 2
        or not all(isinstance(d, int) and d >= 0 for d in shape)
    ):
        raise UnsupportedLayoutError(f"unsupported shape {shape!r}; need 1 or 2 dims", offset=hstart)
    dtype = _DESCRS[descr]
    count = int(np.prod(shape, dtype=np.int64))
    nbytes = count * dtype.itemsize
    if len(buf) - hend != nbytes:
        raise FormatError(
            f"payload size mismatch: expected {nbytes} bytes, found {len(buf) - hend}",
            offset=hend,
        )
    data = np.frombuffer(buf, dtype=dtype, count=count, offset=hend)
    return data.reshape(shape).astype(np.float64)


def save_matrix(matrix, path, precision="f64") -> None:
    """Write a matrix in the NPY v1.0 subset, byte-deterministically."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim not in (1, 2):
        raise ValidationError("only 1-D and 2-D matrices can be saved")
    if min(m.shape) < 1:
        raise ValidationError("matrices with an empty dimension cannot be saved")
    _require_finite(m, "matrix")
    if precision == "f32":
        descr, out = "<f4", m.astype("<f4")
    elif precision == "f64":
        descr, out = "<f8", m.astype("<f8")
    else:
        raise ValidationError(f"precision must be 'f32' or 'f64', got {precision!r}")
    shape_str = "(" + ", ".join(str(d) for d in m.shape) + ("," if m.ndim == 1 else "") + ")"
    header = f"{{'descr': '{descr}', 'fortran_order': False, 'shape': {shape_str}, }}"
    # Pad so magic+version+length+header is a multiple of 64, ending in \n.
    unpadded = 10 + len(header) + 1
    header = header + " " * (-unpadded % 64) + "\n"
    path = Path(path)
    try:
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(bytes([1, 0]))
            fh.write(struct.pack("<H", len(header)))
            fh.write(header.encode("ascii"))
            fh.write(np.ascontiguousarray(out).tobytes())
    except OSError as exc:
        raise IOError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Dataset manifests
# ---------------------------------------------------------------------------

@dataclass
class ManifestEntry:
    sample_id: str
    label: str
    spectrogram: str
    posteriorgram: str | None = None
    ground_truth: dict | None = None
    split: str | None = None

    def to_json(self):
        d = {"sample_id": self.sample_id, "label": self.label, "spectrogram": self.spectrogram}
        if self.split is not None:
            d["split"] = self.split
        if self.posteriorgram is not None:
            d["posteriorgram"] = self.posteriorgram
        if self.ground_truth is not None:
            d["ground_truth"] = self.ground_truth
        return d


@dataclass
class DatasetManifest:
    """Index of one generated or exported dataset.

    All paths are relative to the directory holding the manifest file.
    """

    entries: list[ManifestEntry]
    seed: int = 0
    config: dict = field(default_factory=dict)
    vocab: list[str] | None = None
    root: Path | None = None

    def __post_init__(self):
        ids = [e.sample_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValidationError("sample_ids in a manifest must be unique")

    def resolve(self, relpath) -> Path:
        base = self.root if self.root is not None else Path(".")
        return Path(base) / relpath

    def labels(self):
        return sorted({e.label for e in self.entries})


def save_manifest(manifest: DatasetManifest, path) -> None:
    doc = {
        "seed": manifest.seed,
        "config": manifest.config,
        "entries": [e.to_json() for e in manifest.entries],
    }
    if manifest.vocab is not None:
        doc["vocab"] = manifest.vocab
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.json"
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise IOError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed manifest JSON: {exc}") from None
    entries = [
        ManifestEntry(
            sample_id=e["sample_id"],
            label=e["label"],
            spectrogram=e["spectrogram"],
            posteriorgram=e.get("posteriorgram"),
            ground_truth=e.get("ground_truth"),
            split=e.get("split"),
        )
        for e in doc["entries"]
    ]
    return DatasetManifest(
        entries=entries,
        seed=doc.get("seed", 0),
        config=doc.get("config", {}),
        vocab=doc.get("vocab"),
        root=path.parent,
    )


def validate_manifest(manifest: DatasetManifest) -> None:
    """Fail iff any referenced file is absent or malformed."""
    for e in manifest.entries:
        for rel in filter(None, (e.spectrogram, e.posteriorgram)):
            p = manifest.resolve(rel)
            if not os.path.exists(p):
                raise ValidationError(f"{e.sample_id}: missing file {p}")
            try:
                load_matrix(p)
            except FormatError as exc:
                raise ValidationError(f"{e.sample_id}: malformed file {p}: {exc}") from exc
