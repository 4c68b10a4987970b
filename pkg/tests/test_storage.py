import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import array_shapes, arrays

from puea_detect import storage


@given(arrays(np.float64, array_shapes(min_dims=1, max_dims=3, max_side=6), elements=st.floats(-1e6, 1e6)))
def test_real_matrix_roundtrip(tmp_path_factory, a):
    path = tmp_path_factory.mktemp("m") / "a.bin"
    storage.write_matrix(path, a)
    back = storage.read_matrix(path)
    assert back.shape == a.shape and np.array_equal(back, a)


def test_complex_matrix_roundtrip(tmp_path, rng):
    a = rng.standard_normal((4, 5)) + 1j * rng.standard_normal((4, 5))
    storage.write_matrix(tmp_path / "c.bin", a)
    assert np.array_equal(storage.read_matrix(tmp_path / "c.bin"), a)


def test_matrix_layout(tmp_path):
    storage.write_matrix(tmp_path / "x.bin", np.array([[1.0, 2.0]]))
    raw = (tmp_path / "x.bin").read_bytes()
    assert raw[:4] == b"PUDM" and raw[4] == 0 and raw[5] == 2
    assert np.frombuffer(raw[22:], "<f8").tolist() == [1.0, 2.0]


def test_matrix_errors(tmp_path):
    (tmp_path / "junk.bin").write_bytes(b"nope")
    with pytest.raises(storage.StorageError):
        storage.read_matrix(tmp_path / "junk.bin")
    with pytest.raises(storage.StorageError):
        storage.read_matrix(tmp_path / "missing.bin")
    with pytest.raises(storage.StorageError):
        storage.write_matrix(tmp_path / "no" / "dir.bin", np.zeros(2))


def test_csv_roundtrip(tmp_path):
    storage.write_csv(tmp_path / "t.csv", ["a", "b"], [(1, 0.1), ("x", 2.5)], {"master_seed": 4, "config_hash": "ab"})
    prov, header, rows = storage.read_csv(tmp_path / "t.csv")
    assert prov == {"master_seed": "4", "config_hash": "ab"}
    assert header == ["a", "b"]
    assert rows == [["1", "0.1"], ["x", "2.5"]]
    # floats are written with full precision
    assert float(rows[0][1]) == 0.1


def test_matrix_csv(tmp_path, rng):
    a = rng.standard_normal((3, 4))
    storage.write_matrix_csv(tmp_path / "a.csv", a)
    assert np.array_equal(storage.read_matrix_csv(tmp_path / "a.csv"), a)
    c = a + 1j * a
    storage.write_matrix_csv(tmp_path / "c.csv", c)
    assert np.array_equal(storage.read_matrix_csv(tmp_path / "c.csv"), c)


def test_records_roundtrip(tmp_path, rng):
    sigs = [rng.standard_normal(n) + 1j * rng.standard_normal(n) for n in (5, 1, 7)]
    meta = [{"label": "H0_HOLE", "snr_db": 0.0}, {"label": "H1_PU", "snr_db": 5.0}, {"label": "H2_PUE", "snr_db": 10.0}]
    storage.write_records(tmp_path / "s.bin", sigs, meta)
    back, back_meta = storage.read_records(tmp_path / "s.bin")
    assert all(np.array_equal(a, b) for a, b in zip(sigs, back))
    assert [m["n_samples"] for m in back_meta] == [5, 1, 7]
    assert back_meta[1]["label"] == "H1_PU"


def test_records_mismatch(tmp_path):
    with pytest.raises(ValueError):
        storage.write_records(tmp_path / "s.bin", [np.zeros(2)], [])
    storage.write_records(tmp_path / "s.bin", [np.zeros(2)], [{}])
    (tmp_path / "s.jsonl").write_text('{"n_samples": 3}\n')
    with pytest.raises(storage.StorageError):
        storage.read_records(tmp_path / "s.bin")
