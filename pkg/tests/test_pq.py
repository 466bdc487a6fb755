import numpy as np
import pytest

from qadc import pq as pqmod
from qadc.pq import (
    ProductQuantizer,
    decode_batch,
    encode,
    encode_batch,
    load_model,
    pack_codes,
    reconstruction_mse,
    save_model,
    train_opq,
    train_pq,
    unpack_codes,
)

from helpers import random_unpacked_codes


def _correlated(rng, n=2000, d=16):
    # strong cross-dimension correlation so a rotation has something to fix
    base = rng.standard_normal((n, d // 4)).astype(np.float32)
    mix = rng.standard_normal((d // 4, d)).astype(np.float32)
    return base @ mix + 0.05 * rng.standard_normal((n, d)).astype(np.float32)


def test_pack_nibbles_low_then_high():
    codes = np.array([[5, 9]], dtype=np.uint8)
    packed = pack_codes(codes, b=4)
    assert packed.shape == (1, 1)
    assert packed[0, 0] == 0x95


def test_pack_16bit_little_endian():
    codes = np.array([[0x1234]], dtype=np.uint16)
    packed = pack_codes(codes, b=16)
    assert packed.tolist() == [[0x34, 0x12]]


def test_pack_unpack_round_trip_fuzz(rng):
    for b in (4, 8, 16):
        for _ in range(20):
            m = int(rng.integers(1, 9)) * (2 if b == 4 else 1)
            n = int(rng.integers(0, 50))
            codes = random_unpacked_codes(rng, n, m, b)
            packed = pack_codes(codes, b)
            assert packed.dtype == np.uint8
            back = unpack_codes(packed, m, b)
            assert np.array_equal(back, codes)


def test_pack_rejects_bad_geometry(rng):
    with pytest.raises(ValueError):
        pack_codes(np.zeros((2, 3), dtype=np.uint8), b=4)  # odd m for nibbles
    with pytest.raises(ValueError):
        pack_codes(np.zeros((2, 4), dtype=np.uint8), b=5)
    with pytest.raises(ValueError):
        unpack_codes(np.zeros((2, 3), dtype=np.uint8), m=4, b=8)


def test_train_pq_geometry_and_determinism(rng):
    X = _correlated(rng)
    pq = train_pq(X, m=4, b=4, iters=5, seed=7)
    assert pq.m == 4 and pq.b == 4 and pq.k == 16 and pq.dsub == 4
    assert pq.codebooks.shape == (4, 16, 4)
    assert pq.codebooks.dtype == np.float32
    assert pq.rotation is None  # plain PQ stores no rotation
    again = train_pq(X, m=4, b=4, iters=5, seed=7)
    assert np.array_equal(pq.codebooks, again.codebooks)


def test_train_pq_rejects_bad_geometry(rng):
    X = rng.standard_normal((100, 10)).astype(np.float32)
    with pytest.raises(ValueError):
        train_pq(X, m=3, b=8)  # 10 % 3 != 0
    with pytest.raises(ValueError):
        train_pq(X, m=2, b=3)


def test_encode_matches_per_subspace_argmin(rng):
    X = _correlated(rng, n=800)
    pq = train_pq(X, m=4, b=4, iters=4, seed=0)
    sample = X[:50]
    packed = encode_batch(pq, sample)
    codes = unpack_codes(packed, pq.m, pq.b)
    for i, x in enumerate(sample):
        for j in range(pq.m):
            sub = x[j * pq.dsub : (j + 1) * pq.dsub]
            d2 = ((pq.codebooks[j] - sub) ** 2).sum(axis=1)
            assert codes[i, j] == d2.argmin()


def test_encode_single_matches_batch(rng):
    X = _correlated(rng, n=500)
    pq = train_pq(X, m=2, b=8, iters=4, seed=1)
    packed = encode_batch(pq, X[:10])
    for i in range(10):
        one = encode(pq, X[i])
        assert np.array_equal(np.frombuffer(one.packed, dtype=np.uint8), packed[i])


def test_decode_reconstructs_nearby_points(rng):
    X = _correlated(rng, n=1500)
    pq = train_pq(X, m=4, b=8, iters=8, seed=0)
    packed = encode_batch(pq, X)
    Xhat = decode_batch(pq, packed)
    mse = float(((X - Xhat) ** 2).sum(axis=1).mean())
    assert mse == pytest.approx(reconstruction_mse(pq, X), rel=1e-5)
    assert mse < float((X**2).sum(axis=1).mean())  # beats the zero coder


def test_opq_rotation_is_orthonormal(rng):
    X = _correlated(rng)
    pq = train_opq(X, m=4, b=4, iters=3, opq_iters=4, seed=0)
    eye = pq.rotation @ pq.rotation.T
    np.testing.assert_allclose(eye, np.eye(16), atol=1e-5)


def test_opq_errors_do_not_increase(rng):
    X = _correlated(rng)
    pq = train_opq(X, m=4, b=4, iters=3, opq_iters=6, seed=0)
    errs = pq.train_errors
    assert len(errs) == 6
    for a, b in zip(errs, errs[1:]):
        assert b <= a * (1.0 + 1e-5)


def test_opq_zero_alternations_is_plain_pq(rng):
    X = _correlated(rng)
    a = train_opq(X, m=4, b=4, iters=4, opq_iters=0, seed=3)
    b = train_pq(X, m=4, b=4, iters=4, seed=3)
    assert np.array_equal(a.rotation, np.eye(16, dtype=np.float32))
    assert np.array_equal(a.codebooks, b.codebooks)


def test_opq_beats_pq_on_correlated_data(rng):
    X = _correlated(rng, n=3000)
    plain = train_pq(X, m=4, b=4, iters=8, seed=0)
    opq = train_opq(X, m=4, b=4, iters=8, opq_iters=10, seed=0)
    assert reconstruction_mse(opq, X) < reconstruction_mse(plain, X)


def test_model_save_load_bit_exact(tmp_path, rng):
    X = _correlated(rng)
    for pq in (
        train_pq(X, m=4, b=8, iters=3, seed=0),
        train_opq(X, m=8, b=4, iters=3, opq_iters=3, seed=0),
    ):
        path = tmp_path / "model.qadc"
        save_model(pq, path)
        back = load_model(path)
        assert back.m == pq.m and back.b == pq.b and back.d == pq.d
        assert np.array_equal(back.codebooks, pq.codebooks)
        assert np.array_equal(back.rotation, pq.rotation)


def test_model_load_rejects_corruption(tmp_path, rng):
    X = _correlated(rng)
    pq = train_pq(X, m=4, b=4, iters=2, seed=0)
    path = tmp_path / "model.qadc"
    save_model(pq, path)
    raw = path.read_bytes()

    bad = tmp_path / "bad.qadc"
    bad.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ValueError):
        load_model(bad)

    bad.write_bytes(raw[:10])
    with pytest.raises(ValueError):
        load_model(bad)

    bad.write_bytes(raw[:-8])
    with pytest.raises(ValueError):
        load_model(bad)

    wrong_version = raw[:4] + b"\x63\x00\x00\x00" + raw[8:]
    bad.write_bytes(wrong_version)
    with pytest.raises(ValueError):
        load_model(bad)


def test_product_quantizer_validates_shapes():
    with pytest.raises(ValueError):
        ProductQuantizer(
            m=2,
            b=4,
            codebooks=np.zeros((2, 15, 3), dtype=np.float32),  # k should be 16
            rotation=np.eye(6, dtype=np.float32),
            train_errors=(),
        )
