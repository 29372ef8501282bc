"""Index persistence, record parsing, and CSV formatting."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hbf import (
    BadMagicError,
    PersistenceError,
    RecordFormatError,
    TruncatedFileError,
    VersionMismatchError,
    build,
    deserialize_memory,
    load_memory,
    save_memory,
    serialize_memory,
)
from hbf.storage import MAGIC, csv_text, read_labels, read_records_tsv


def sample_memory(items=5, dim=256, rho=1.25):
    records = [(b"k%02d" % i, b"v%02d" % i) for i in range(items)]
    return build(records, dim, rho=rho, key_seed=11, value_seed=22)


def test_round_trip_bitwise_identity(tmp_path):
    mem = sample_memory()
    path = tmp_path / "index.hbf"
    save_memory(mem, path)
    loaded = load_memory(path)
    assert loaded.vector.tobytes() == mem.vector.tobytes()
    assert loaded.gain == mem.gain
    assert loaded.item_count == mem.item_count
    assert loaded.key_seed == mem.key_seed
    assert loaded.value_seed == mem.value_seed
    # and the serialized form itself is stable
    assert serialize_memory(loaded) == serialize_memory(mem)


def test_serialized_layout():
    mem = sample_memory(dim=4)
    blob = serialize_memory(mem)
    assert blob[:4] == MAGIC == b"HBF1"
    assert len(blob) == 4 + 44 + 8 * 4
    assert int.from_bytes(blob[4:8], "little") == 1  # version


def test_bad_magic():
    blob = serialize_memory(sample_memory())
    with pytest.raises(BadMagicError):
        deserialize_memory(b"XXF1" + blob[4:])
    with pytest.raises(BadMagicError):
        deserialize_memory(b"garbage-not-an-index")


def test_version_mismatch():
    blob = bytearray(serialize_memory(sample_memory()))
    blob[4:8] = (99).to_bytes(4, "little")
    with pytest.raises(VersionMismatchError):
        deserialize_memory(bytes(blob))


def test_truncation_variants():
    blob = serialize_memory(sample_memory())
    with pytest.raises(TruncatedFileError):
        deserialize_memory(blob[:2])  # inside the magic
    with pytest.raises(TruncatedFileError):
        deserialize_memory(blob[:20])  # inside the header
    with pytest.raises(TruncatedFileError):
        deserialize_memory(blob[:-8])  # inside the coordinate array


def test_trailing_data_rejected():
    blob = serialize_memory(sample_memory())
    with pytest.raises(PersistenceError):
        deserialize_memory(blob + b"\x00")


def test_non_finite_payload_rejected():
    blob = bytearray(serialize_memory(sample_memory(dim=8)))
    blob[48:56] = np.float64("nan").tobytes()
    with pytest.raises(PersistenceError):
        deserialize_memory(bytes(blob))


def test_load_missing_file_raises_oserror(tmp_path):
    with pytest.raises(OSError):
        load_memory(tmp_path / "missing.hbf")


@settings(max_examples=40, deadline=None)
@given(
    dim=st.sampled_from([2, 3, 64, 257]),
    gain=st.floats(min_value=1e-6, max_value=1e6, allow_nan=False),
    seeds=st.tuples(st.integers(0, 2**64 - 1), st.integers(0, 2**64 - 1)),
)
def test_property_round_trip(dim, gain, seeds):
    mem = build([(b"a", b"b")], dim, rho=gain, key_seed=seeds[0], value_seed=seeds[1])
    again = deserialize_memory(serialize_memory(mem))
    assert serialize_memory(again) == serialize_memory(mem)


# ---------------------------------------------------------------------------
# record files


def test_read_records_tsv(tmp_path):
    path = tmp_path / "records.tsv"
    path.write_text("fileA\tdoc-1\n\nfileB\tdoc-2\n", encoding="utf-8")
    assert read_records_tsv(path) == [(b"fileA", b"doc-1"), (b"fileB", b"doc-2")]


def test_read_records_tsv_bad_lines(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("fileA\n", encoding="utf-8")
    with pytest.raises(RecordFormatError):
        read_records_tsv(path)
    path.write_text("a\tb\tc\n", encoding="utf-8")
    with pytest.raises(RecordFormatError):
        read_records_tsv(path)
    path.write_text("\tvalue\n", encoding="utf-8")
    with pytest.raises(RecordFormatError):
        read_records_tsv(path)


def test_read_labels(tmp_path):
    path = tmp_path / "labels.txt"
    path.write_text("doc-1\n\n  doc-2  \n", encoding="utf-8")
    assert read_labels(path) == [b"doc-1", b"doc-2"]


# ---------------------------------------------------------------------------
# CSV


def test_csv_text_rfc4180():
    text = csv_text(("a", "b"), [(1, "x,y"), (2.5, None)])
    lines = text.split("\r\n")
    assert lines[0] == "a,b"
    assert lines[1] == '1,"x,y"'  # embedded comma gets quoted
    assert lines[2] == "2.5,"  # None renders as empty field
    assert text.endswith("\r\n")
