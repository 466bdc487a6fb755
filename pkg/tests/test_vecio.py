import numpy as np
import pytest

from qadc import vecio
from qadc.vecio import Dataset, FormatError


def test_fvecs_round_trip_bit_exact(tmp_path, rng):
    data = rng.standard_normal((37, 13)).astype(np.float32)
    # plant awkward values the round trip must preserve exactly
    data[0, 0] = 0.0
    data[1, 0] = -0.0
    data[2, 0] = np.float32(np.inf)
    data[3, 0] = np.float32(1e-45)  # subnormal
    path = tmp_path / "x.fvecs"
    vecio.write_fvecs(path, Dataset.from_array(data))
    back = vecio.read_fvecs(path)
    assert back.dim == 13 and back.count == 37
    assert back.data.dtype == np.float32
    assert np.array_equal(back.data.view(np.uint32), data.view(np.uint32))


def test_fvecs_limit_reads_prefix(tmp_path, rng):
    data = rng.standard_normal((20, 4)).astype(np.float32)
    path = tmp_path / "x.fvecs"
    vecio.write_fvecs(path, Dataset.from_array(data))
    back = vecio.read_fvecs(path, limit=7)
    assert back.count == 7
    assert np.array_equal(back.data, data[:7])
    # limit beyond the file just reads everything
    assert vecio.read_fvecs(path, limit=1000).count == 20


def test_fvecs_empty_file(tmp_path):
    path = tmp_path / "empty.fvecs"
    path.write_bytes(b"")
    back = vecio.read_fvecs(path)
    assert back.count == 0 and back.dim == 0


def test_fvecs_truncated_record_rejected(tmp_path, rng):
    data = rng.standard_normal((5, 8)).astype(np.float32)
    path = tmp_path / "x.fvecs"
    vecio.write_fvecs(path, Dataset.from_array(data))
    raw = path.read_bytes()
    path.write_bytes(raw[:-4])
    with pytest.raises(FormatError):
        vecio.read_fvecs(path)


def test_fvecs_inconsistent_dim_rejected(tmp_path):
    rec1 = np.array([3], dtype="<i4").tobytes() + np.zeros(3, dtype="<f4").tobytes()
    rec2 = np.array([2], dtype="<i4").tobytes() + np.zeros(2, dtype="<f4").tobytes()
    # pad second record so total size is a multiple of the first stride
    path = tmp_path / "x.fvecs"
    path.write_bytes(rec1 + rec2 + b"\0\0\0\0")
    with pytest.raises(FormatError):
        vecio.read_fvecs(path)


def test_fvecs_nonpositive_dim_rejected(tmp_path):
    path = tmp_path / "x.fvecs"
    path.write_bytes(np.array([0, 0], dtype="<i4").tobytes())
    with pytest.raises(FormatError):
        vecio.read_fvecs(path)


def test_ivecs_round_trip(tmp_path, rng):
    ids = rng.integers(0, 10**6, size=(11, 100)).astype(np.int32)
    path = tmp_path / "gt.ivecs"
    vecio.write_ivecs(path, ids)
    back = vecio.read_ivecs(path)
    assert back.depth == 100 and back.count == 11
    assert np.array_equal(back.ids, ids)


def test_ivecs_empty(tmp_path):
    path = tmp_path / "gt.ivecs"
    vecio.write_ivecs(path, np.empty((0, 0), dtype=np.int32))
    back = vecio.read_ivecs(path)
    assert back.count == 0 and back.depth == 0


def test_bvecs_reads_bytes_as_float(tmp_path):
    vals = np.array([[0, 1, 255, 128], [7, 0, 3, 200]], dtype=np.uint8)
    path = tmp_path / "x.bvecs"
    with open(path, "wb") as f:
        for row in vals:
            f.write(np.array([4], dtype="<i4").tobytes())
            f.write(row.tobytes())
    back = vecio.read_bvecs(path)
    assert back.data.dtype == np.float32
    assert np.array_equal(back.data, vals.astype(np.float32))
    assert vecio.read_bvecs(path, limit=1).count == 1


def test_bvecs_truncated_rejected(tmp_path):
    path = tmp_path / "x.bvecs"
    path.write_bytes(np.array([4], dtype="<i4").tobytes() + b"\1\2\3")
    with pytest.raises(FormatError):
        vecio.read_bvecs(path)


def test_dataset_from_array_validates():
    with pytest.raises(ValueError):
        Dataset.from_array(np.zeros(3, dtype=np.float32))
    d = Dataset.from_array(np.zeros((2, 3)))
    assert d.data.dtype == np.float32
    with pytest.raises(ValueError):
        Dataset(dim=3, count=5, data=np.zeros((2, 3), dtype=np.float32))
