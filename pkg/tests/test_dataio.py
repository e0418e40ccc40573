import json
import struct

import numpy as np
import pytest

from gslearn import dataio
from gslearn.errors import (
    BadMagicError, EdgeListError, LengthMismatchError, SchemaError, TruncatedFileError,
    VersionMismatchError,
)
from gslearn.synth import Dataset, GraphEnsembleSpec, SignalModelSpec, build_dataset
from gslearn.unroll import init_model, unroll_forward

HEADER_HEX = (
    "47534c44"          # magic "GSLD"
    "01000000"          # version 1
    "01000000"          # one sample
    "02000000"          # n = 2
    "01000000"          # p = 1
    "02"                # kind 2 = distance
    "00000000000000"    # reserved
)


def tiny():
    a = np.array([[[0.0, 1.0], [1.0, 0.0]]])
    x = np.array([[[0.0], [1.0]]])
    return Dataset(a, x, a.copy(), "distance", {"train": 1, "val": 0, "test": 0}, {"note": "hex"})


def test_byte_layout_fixture(tmp_path):
    path = tmp_path / "t.gsld"
    dataio.write_dataset(tiny(), path)
    blob = path.read_bytes()
    assert blob[:28].hex() == HEADER_HEX
    one = struct.pack("<d", 1.0).hex()
    assert blob[28 + 8:28 + 16].hex() == one          # A[0, 1]
    assert blob[28 + 32 + 8:28 + 48].hex() == one     # X[1, 0]
    assert blob[28 + 48 + 16:28 + 48 + 24].hex() == one  # S[1, 0]
    body_end = 28 + 10 * 8
    (meta_len,) = struct.unpack_from("<Q", blob, body_end)
    meta = json.loads(blob[body_end + 8:])
    assert meta_len == len(blob) - body_end - 8
    assert meta == {"note": "hex", "sizes": {"test": 0, "train": 1, "val": 0}}


def test_dataset_roundtrip_bitwise(tmp_path):
    ds = build_dataset(GraphEnsembleSpec("ER", 5, {"p": 0.5}, 2),
                       SignalModelSpec(model="gaussian", p_signals=3), "correlation",
                       {"train": 2, "val": 1, "test": 1})
    path = tmp_path / "d.gsld"
    dataio.write_dataset(ds, path)
    back = dataio.read_dataset(path)
    for name in ("adjacency", "signals", "similarity"):
        assert getattr(back, name).tobytes() == getattr(ds, name).tobytes()
    assert back.kind == "correlation" and back.sizes == ds.sizes
    assert back.metadata == json.loads(json.dumps(ds.metadata))
    info = dataio.dataset_info(path)
    assert info["count"] == 4 and info["n"] == 5 and info["bytes"] == path.stat().st_size


@pytest.mark.parametrize("mutate, error", [
    (lambda b: b"XXXX" + b[4:], BadMagicError),
    (lambda b: b[:4] + struct.pack("<I", 7) + b[8:], VersionMismatchError),
    (lambda b: b[:60], TruncatedFileError),
    (lambda b: b[:12], TruncatedFileError),
    (lambda b: b + b"junk", LengthMismatchError),
    (lambda b: b[:-3] + b"}}}", SchemaError),
    (lambda b: b[:20] + b"\x09" + b[21:], SchemaError),
])
def test_corrupted_files(tmp_path, mutate, error):
    path = tmp_path / "t.gsld"
    dataio.write_dataset(tiny(), path)
    path.write_bytes(mutate(path.read_bytes()))
    with pytest.raises(error):
        dataio.read_dataset(path)


def test_truncation_reports_lengths(tmp_path):
    path = tmp_path / "t.gsld"
    dataio.write_dataset(tiny(), path)
    path.write_bytes(path.read_bytes()[:60])
    with pytest.raises(TruncatedFileError) as info:
        dataio.read_dataset(path)
    assert info.value.expected == 116 and info.value.actual == 60


def test_edge_list_examples():
    assert np.array_equal(dataio.parse_edge_list("0 1\n", 2), [[0, 1], [1, 0]])
    a = dataio.parse_edge_list("0 1 2.5\n1 2 1.0\n", 3)
    assert a[0, 1] == a[1, 0] == 2.5 and a[1, 2] == a[2, 1] == 1.0
    with pytest.raises(EdgeListError) as info:
        dataio.parse_edge_list("0 0\n")
    assert info.value.lineno == 1


def test_edge_list_grammar_details():
    text = "# header\n\n0 1 1.0  # trailing\n1 0 3.0\n2\t3\n"
    a = dataio.parse_edge_list(text)
    assert a.shape == (4, 4) and a[0, 1] == 3.0 and a[2, 3] == 1.0
    for bad, line in [("0 1\nfoo bar\n", 2), ("0 1 2 3\n", 1), ("0 5\n", 1), ("0 1 -1\n", 1)]:
        with pytest.raises(EdgeListError) as info:
            dataio.parse_edge_list(bad, 3)
        assert info.value.lineno == line


def test_model_roundtrip_bitwise(tmp_path):
    model = init_model("gdn", 10, seed=9)
    model.raw[0, 0] = 0.1 + 0.2  # not exactly representable in few digits
    dataio.save_model(model, tmp_path / "m.json")
    back = dataio.load_model(tmp_path / "m.json")
    assert back.raw.tobytes() == model.raw.tobytes()
    assert (back.method, back.depth, back.tied, back.order) == ("gdn", 10, False, 1)


def test_model_schema_errors(tmp_path):
    model = init_model("glad", 3)
    dataio.save_model(model, tmp_path / "m.json")
    with pytest.raises(SchemaError):
        dataio.load_model(tmp_path / "m.json", method="gdn")
    doc = json.loads((tmp_path / "m.json").read_text())
    doc["depth"] = 5
    with pytest.raises(SchemaError):
        dataio.model_from_json(doc)
    doc["depth"], doc["format_version"] = 3, 99
    with pytest.raises(VersionMismatchError):
        dataio.model_from_json(doc)
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(SchemaError):
        dataio.load_model(tmp_path / "bad.json")


def test_intermediate_dumps(tmp_path):
    model = init_model("gdn", 3, seed=1)
    s = np.cov(np.random.default_rng(0).standard_normal((5, 20)))
    _, trace = unroll_forward(model, s, keep_caches=False)
    files = dataio.dump_intermediates(model, trace, tmp_path / "dump")
    assert len(files) == 8
    assert [f.name for f in files[:2]] == ["layer_000.csv", "layer_000.pgm"]
    for f, state in zip(files[::2], trace.states):
        assert np.array_equal(dataio.read_csv_matrix(f), state[0][0])
    for f, state in zip(files[1::2], trace.states):
        assert dataio.pgm_bytes(state[0][0]) == f.read_bytes()
        assert dataio.read_pgm(f).shape == (5, 5)


def test_pgm_constant_matrix_is_zero():
    blob = dataio.pgm_bytes(np.full((2, 3), 4.2))
    assert blob == b"P5\n3 2\n255\n" + bytes(6)
    assert dataio.pgm_bytes(np.array([[-1.0, 0.0, 1.0]]))[-3:] == bytes([0, 128, 255])
