"""Domain type validation and bit-exact file I/O."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pdsm.errors import (
    FormatError,
    UnsupportedLayoutError,
    UnsupportedVersionError,
    ValidationError,
)
from pdsm.interchange import (
    DatasetManifest,
    DiscretizedMask,
    ManifestEntry,
    PhonemeSegmentation,
    Posteriorgram,
    SaliencyMap,
    Segment,
    Spectrogram,
    load_manifest,
    load_matrix,
    save_manifest,
    save_matrix,
    validate_manifest,
)

finite_f64 = st.floats(allow_nan=False, allow_infinity=False, width=64)


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

def test_spectrogram_accepts_nonnegative():
    s = Spectrogram(np.ones((3, 4)), sample_id="a")
    assert s.shape == (3, 4)


@pytest.mark.parametrize("bad", [
    -np.ones((2, 2)),
    np.full((2, 2), np.nan),
    np.full((2, 2), np.inf),
    np.ones(4),
    np.ones((0, 3)),
])
def test_spectrogram_rejects_invalid(bad):
    with pytest.raises(ValidationError):
        Spectrogram(bad)


def test_saliency_map_allows_negative_but_not_nan():
    SaliencyMap(np.array([[-1.0, 2.0]]), "ig", 1)
    with pytest.raises(ValidationError):
        SaliencyMap(np.array([[np.nan]]), "ig", 1)
    with pytest.raises(ValidationError):
        SaliencyMap(np.ones((2, 2)), "nonsense", 1)


def test_posteriorgram_vocab_length_must_match():
    Posteriorgram(np.ones((3, 5)), vocab=["a", "b", "c"])
    with pytest.raises(ValidationError):
        Posteriorgram(np.ones((3, 5)), vocab=["a", "b"])
    with pytest.raises(ValidationError):
        Posteriorgram(-np.ones((3, 5)))


def test_segmentation_invariants():
    good = PhonemeSegmentation([Segment(0, 0, 2), Segment(1, 2, 5)], 5)
    assert len(good) == 2
    with pytest.raises(ValidationError):
        PhonemeSegmentation([], 0)
    with pytest.raises(ValidationError):  # does not start at 0
        PhonemeSegmentation([Segment(0, 1, 5)], 5)
    with pytest.raises(ValidationError):  # does not end at total_frames
        PhonemeSegmentation([Segment(0, 0, 4)], 5)
    with pytest.raises(ValidationError):  # gap between segments
        PhonemeSegmentation([Segment(0, 0, 2), Segment(1, 3, 5)], 5)
    with pytest.raises(ValidationError):  # empty segment
        PhonemeSegmentation([Segment(0, 0, 0), Segment(1, 0, 5)], 5)
    with pytest.raises(ValidationError):  # repeated phoneme violates run-length
        PhonemeSegmentation([Segment(0, 0, 2), Segment(0, 2, 5)], 5)


def test_discretized_mask_invariants():
    m = DiscretizedMask(np.array([[1.0, 0.0], [1.0, 0.0]]), selected=[0], k_requested=1)
    assert list(m.column_indicator) == [1.0, 0.0]
    with pytest.raises(ValidationError):  # non-binary
        DiscretizedMask(np.array([[0.5, 0.0]]))
    with pytest.raises(ValidationError):  # column not constant
        DiscretizedMask(np.array([[1.0, 0.0], [0.0, 0.0]]))


# ---------------------------------------------------------------------------
# NPY subset
# ---------------------------------------------------------------------------

def test_round_trip_2x3(tmp_path):
    x = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    save_matrix(x, tmp_path / "m.npy")
    assert np.array_equal(load_matrix(tmp_path / "m.npy"), x)


def test_save_matches_numpy_writer(tmp_path):
    # Independent oracle: numpy's own NPY v1.0 writer.
    rng = np.random.default_rng(0)
    for shape in [(1, 1), (2, 3), (7,), (64, 128)]:
        x = rng.normal(size=shape)
        save_matrix(x, tmp_path / "ours.npy")
        np.save(tmp_path / "ref.npy", x)
        assert (tmp_path / "ours.npy").read_bytes() == (tmp_path / "ref.npy").read_bytes()


def test_f32_round_trip_is_f32_exact(tmp_path):
    x = np.random.default_rng(1).normal(size=(64, 128))
    save_matrix(x, tmp_path / "m.npy", precision="f32")
    loaded = load_matrix(tmp_path / "m.npy")
    assert np.array_equal(loaded, x.astype(np.float32).astype(np.float64))
    # and numpy agrees on the bytes
    np.save(tmp_path / "ref.npy", x.astype("<f4"))
    assert (tmp_path / "m.npy").read_bytes() == (tmp_path / "ref.npy").read_bytes()


def test_loads_numpy_written_file(tmp_path):
    x = np.random.default_rng(2).normal(size=(5, 9))
    np.save(tmp_path / "m.npy", x)
    assert np.array_equal(load_matrix(tmp_path / "m.npy"), x)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 8)), elements=finite_f64))
def test_round_trip_f64_bitwise(tmp_path_factory, x):
    path = tmp_path_factory.mktemp("npy") / "m.npy"
    save_matrix(x, path)
    loaded = load_matrix(path)
    assert loaded.tobytes() == x.tobytes()


def test_second_save_is_bitwise_idempotent(tmp_path):
    rng = np.random.default_rng(3)
    for i in range(50):
        x = rng.normal(size=(rng.integers(1, 10), rng.integers(1, 10)))
        p1, p2 = tmp_path / f"a{i}.npy", tmp_path / f"b{i}.npy"
        save_matrix(x, p1)
        save_matrix(load_matrix(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()


def test_header_shape_of_1x1(tmp_path):
    save_matrix(np.array([[0.5]]), tmp_path / "m.npy")
    raw = (tmp_path / "m.npy").read_bytes()
    assert b"'shape': (1, 1)" in raw


def test_rejects_empty_dimension(tmp_path):
    with pytest.raises(ValidationError):
        save_matrix(np.ones((0, 3)), tmp_path / "m.npy")
    with pytest.raises(ValidationError):
        save_matrix(np.ones((2, 2, 2)), tmp_path / "m.npy")
    with pytest.raises(ValidationError):
        save_matrix(np.ones((2, 2)), tmp_path / "m.npy", precision="f16")


def _valid_file(tmp_path):
    path = tmp_path / "m.npy"
    save_matrix(np.ones((2, 2)), path)
    return path, bytearray(path.read_bytes())


def test_rejects_bad_magic(tmp_path):
    path, raw = _valid_file(tmp_path)
    raw[0] = 0x00
    path.write_bytes(raw)
    with pytest.raises(FormatError) as exc:
        load_matrix(path)
    assert exc.value.offset == 0


def test_rejects_version_2(tmp_path):
    path, raw = _valid_file(tmp_path)
    raw[6] = 2
    path.write_bytes(raw)
    with pytest.raises(UnsupportedVersionError) as exc:
        load_matrix(path)
    assert exc.value.offset == 6


def test_rejects_fortran_order(tmp_path):
    path = tmp_path / "m.npy"
    np.save(path, np.asfortranarray(np.ones((3, 2))))
    with pytest.raises(UnsupportedLayoutError):
        load_matrix(path)


def test_rejects_3d_and_exotic_dtypes(tmp_path):
    path = tmp_path / "m.npy"
    np.save(path, np.ones((2, 2, 2)))
    with pytest.raises(UnsupportedLayoutError):
        load_matrix(path)
    np.save(path, np.ones((2, 2), dtype=np.int32))
    with pytest.raises(UnsupportedLayoutError):
        load_matrix(path)


def test_rejects_truncated_payload(tmp_path):
    path, raw = _valid_file(tmp_path)
    path.write_bytes(raw[:-8])
    with pytest.raises(FormatError) as exc:
        load_matrix(path)
    assert "payload size mismatch" in str(exc.value)
    assert exc.value.offset is not None


def test_rejects_short_file(tmp_path):
    path = tmp_path / "m.npy"
    path.write_bytes(b"\x93NUM")
    with pytest.raises(FormatError):
        load_matrix(path)


def test_rejects_unparseable_header(tmp_path):
    path, raw = _valid_file(tmp_path)
    hlen = int.from_bytes(raw[8:10], "little")
    raw[10 : 10 + hlen] = b"{" + b"x" * (hlen - 1)
    path.write_bytes(raw)
    with pytest.raises(FormatError):
        load_matrix(path)


# ---------------------------------------------------------------------------
# Manifests
# ---------------------------------------------------------------------------

def _tiny_manifest(tmp_path):
    save_matrix(np.ones((2, 3)), tmp_path / "x.npy")
    entries = [ManifestEntry("s0", "real", "x.npy", split="train")]
    return DatasetManifest(entries, seed=7, config={"task": "t"}, root=tmp_path)


def test_manifest_round_trip(tmp_path):
    man = _tiny_manifest(tmp_path)
    save_manifest(man, tmp_path / "manifest.json")
    back = load_manifest(tmp_path / "manifest.json")
    assert back.seed == 7
    assert back.entries[0].sample_id == "s0"
    assert back.entries[0].split == "train"
    assert back.root == tmp_path
    # loading the directory resolves to manifest.json
    assert load_manifest(tmp_path).seed == 7


def test_manifest_requires_unique_ids(tmp_path):
    with pytest.raises(ValidationError):
        DatasetManifest([
            ManifestEntry("dup", "real", "a.npy"),
            ManifestEntry("dup", "fake", "b.npy"),
        ])


def test_manifest_bytes_stable(tmp_path):
    man = _tiny_manifest(tmp_path)
    save_manifest(man, tmp_path / "a.json")
    save_manifest(man, tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    doc = json.loads((tmp_path / "a.json").read_text())
    assert set(doc) == {"seed", "config", "entries"}


def test_validate_manifest_detects_missing_and_malformed(tmp_path):
    man = _tiny_manifest(tmp_path)
    validate_manifest(man)
    (tmp_path / "x.npy").write_bytes(b"garbage")
    with pytest.raises(ValidationError):
        validate_manifest(man)
    (tmp_path / "x.npy").unlink()
    with pytest.raises(ValidationError):
        validate_manifest(man)
