import numpy as np
import pytest

from qadc import ivf, kmeans
from qadc import pq as pqmod
from qadc.ivf import (
    LAYOUT_STANDARD,
    LAYOUT_TRANSPOSED,
    StandardList,
    build,
    build_flat,
    load_index,
    probe,
    save_index,
)
from qadc.qadc import TransposedList, untranspose_list
from qadc.vecio import FormatError


def _clustered(rng, n=2000, d=16, k=10):
    centers = rng.standard_normal((k, d)).astype(np.float32) * 4.0
    idx = rng.integers(0, k, size=n)
    return centers[idx] + 0.3 * rng.standard_normal((n, d)).astype(np.float32)


def _pq_for(rng, X, m=4, b=4):
    return pqmod.train_pq(X, m=m, b=b, iters=4, seed=0)


def _all_ids(index):
    out = []
    for lst in index.lists:
        if isinstance(lst, TransposedList):
            _, ids = untranspose_list(lst)
        else:
            ids = lst.ids
        out.append(ids)
    return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)


@pytest.mark.parametrize("layout", [LAYOUT_STANDARD, LAYOUT_TRANSPOSED])
def test_lists_partition_the_base(rng, layout):
    X = _clustered(rng)
    pq = _pq_for(rng, X)
    index = build(pq, coarse_k=16, base=X, iters=4, seed=1, layout=layout)
    assert index.K == 16 and index.count == X.shape[0]
    ids = _all_ids(index)
    assert np.array_equal(np.sort(ids), np.arange(X.shape[0]))
    # ids ascend within each cell
    for lst in index.lists:
        cur = lst.ids if isinstance(lst, StandardList) else untranspose_list(lst)[1]
        assert (np.diff(cur) > 0).all()


def test_single_cell_contains_everything(rng):
    X = _clustered(rng, n=100)
    pq = _pq_for(rng, X)
    index = build(pq, coarse_k=1, base=X, iters=2, seed=0)
    assert index.nlists == 1
    assert index.lists[0].ids.shape[0] == 100


def test_empty_cells_are_allowed(rng):
    # far more cells than natural clusters leaves some cells unused
    X = _clustered(rng, n=300, k=3)
    pq = _pq_for(rng, X)
    for layout in (LAYOUT_STANDARD, LAYOUT_TRANSPOSED):
        index = build(pq, coarse_k=64, base=X, iters=3, seed=0, layout=layout)
        assert np.array_equal(np.sort(_all_ids(index)), np.arange(300))


def test_vector_on_centroid_encodes_zero_residual(rng):
    X = _clustered(rng, n=500)
    pq = _pq_for(rng, X)
    # coarse training pinned to X so appending to the base cannot move it
    index = build(pq, coarse_k=8, base=X, iters=5, seed=0, learn=X)
    probe_x = index.coarse.centroids[3]
    X2 = np.vstack([X, probe_x[None, :]])
    index2 = build(pq, coarse_k=8, base=X2, iters=5, seed=0, learn=X)
    assert np.array_equal(index2.coarse.centroids, index.coarse.centroids)
    labels, _ = kmeans.assign_batch(index2.coarse.centroids, probe_x[None, :])
    lst = index2.lists[int(labels[0])]
    row = np.flatnonzero(lst.ids == 500)
    assert row.size == 1
    want = pqmod.encode_batch(pq, np.zeros((1, pq.d), dtype=np.float32))
    assert np.array_equal(lst.codes[row[0]], want[0])


def test_probe_matches_brute_force(rng):
    X = _clustered(rng)
    pq = _pq_for(rng, X)
    index = build(pq, coarse_k=32, base=X, iters=4, seed=0)
    for _ in range(20):
        q = rng.standard_normal(16).astype(np.float32) * 3
        ps = probe(index, q, ma=5)
        d2 = ((index.coarse.centroids - q) ** 2).sum(axis=1)
        want = np.lexsort((np.arange(32), d2))[:5]
        assert np.array_equal(ps.cells, want)
        np.testing.assert_allclose(
            ps.residual_queries, q[None, :] - index.coarse.centroids[want],
            rtol=1e-6)


def test_probe_ties_break_to_lower_cell(rng):
    X = _clustered(rng, n=64)
    pq = _pq_for(rng, X)
    index = build(pq, coarse_k=4, base=X, iters=2, seed=0)
    # force duplicate centroids, then probe from that exact point
    index.coarse.centroids[2] = index.coarse.centroids[1]
    ps = probe(index, index.coarse.centroids[1], ma=2)
    assert ps.cells[0] == 1 and ps.cells[1] == 2


def test_probe_all_cells_is_a_permutation(rng):
    X = _clustered(rng)
    pq = _pq_for(rng, X)
    index = build(pq, coarse_k=16, base=X, iters=3, seed=0)
    ps = probe(index, rng.standard_normal(16).astype(np.float32), ma=16)
    assert np.array_equal(np.sort(ps.cells), np.arange(16))


def test_probe_validates(rng):
    X = _clustered(rng, n=100)
    pq = _pq_for(rng, X)
    index = build(pq, coarse_k=8, base=X, iters=2, seed=0)
    with pytest.raises(ValueError):
        probe(index, np.zeros(16, dtype=np.float32), ma=9)
    with pytest.raises(ValueError):
        probe(index, np.zeros(16, dtype=np.float32), ma=0)
    with pytest.raises(ValueError):
        probe(index, np.zeros(15, dtype=np.float32), ma=2)
    flat = build_flat(pq, X)
    with pytest.raises(ValueError):
        probe(flat, np.zeros(16, dtype=np.float32), ma=1)


def test_residual_encoding_beats_raw_on_clustered_data(rng):
    X = _clustered(rng, n=3000, d=16, k=12)
    pq = _pq_for(rng, X, m=4, b=4)
    index = build(pq, coarse_k=12, base=X, iters=8, seed=0)
    labels, _ = kmeans.assign_batch(index.coarse.centroids, X)
    residuals = X - index.coarse.centroids[labels]
    raw_mse = pqmod.reconstruction_mse(pq, X)
    res_mse = pqmod.reconstruction_mse(
        pqmod.train_pq(residuals, m=4, b=4, iters=8, seed=0), residuals)
    assert res_mse < raw_mse


def test_build_validates(rng):
    X = _clustered(rng, n=50)
    pq = _pq_for(rng, X)
    with pytest.raises(ValueError):
        build(pq, coarse_k=51, base=X)
    with pytest.raises(ValueError):
        build(pq, coarse_k=0, base=X)
    with pytest.raises(ValueError):
        build(pq, coarse_k=4, base=rng.standard_normal((50, 15)).astype(np.float32))
    X8 = _clustered(rng, n=300)
    pq8 = pqmod.train_pq(X8, m=2, b=8, iters=2, seed=0)
    with pytest.raises(ValueError):
        build(pq8, coarse_k=4, base=X8, layout=LAYOUT_TRANSPOSED)
    with pytest.raises(ValueError):
        build(pq, coarse_k=4, base=X, layout="diagonal")


def test_learn_set_steers_coarse_training(rng):
    X = _clustered(rng, n=400)
    learn = _clustered(rng, n=800)
    pq = _pq_for(rng, X)
    a = build(pq, coarse_k=8, base=X, iters=4, seed=0, learn=learn)
    b = build(pq, coarse_k=8, base=X, iters=4, seed=0)
    want = kmeans.train(learn, 8, iters=4, seed=0)
    assert np.array_equal(a.coarse.centroids, want.centroids)
    assert not np.array_equal(a.coarse.centroids, b.coarse.centroids)


@pytest.mark.parametrize("layout", [LAYOUT_STANDARD, LAYOUT_TRANSPOSED])
def test_save_load_round_trip(tmp_path, rng, layout):
    X = _clustered(rng, n=700)
    pq = _pq_for(rng, X)
    index = build(pq, coarse_k=16, base=X, iters=3, seed=2, layout=layout)
    path = tmp_path / "index.qivf"
    save_index(index, path)
    back = load_index(path)
    assert back.d == index.d and back.m == index.m and back.b == index.b
    assert back.K == index.K and back.layout == layout
    assert np.array_equal(back.coarse.centroids, index.coarse.centroids)
    for a, b in zip(back.lists, index.lists):
        if layout == LAYOUT_TRANSPOSED:
            assert np.array_equal(a.blocks, b.blocks)
            assert np.array_equal(a.ids, b.ids)
            assert a.count == b.count
        else:
            assert np.array_equal(a.codes, b.codes)
            assert np.array_equal(a.ids, b.ids)


def test_save_load_flat_index(tmp_path, rng):
    X = _clustered(rng, n=300)
    pq = _pq_for(rng, X)
    index = build_flat(pq, X, layout=LAYOUT_TRANSPOSED)
    assert index.K == 0 and index.coarse is None
    path = tmp_path / "flat.qivf"
    save_index(index, path)
    back = load_index(path)
    assert back.coarse is None and back.K == 0
    assert np.array_equal(back.lists[0].blocks, index.lists[0].blocks)


def test_load_rejects_corruption(tmp_path, rng):
    X = _clustered(rng, n=200)
    pq = _pq_for(rng, X)
    index = build(pq, coarse_k=4, base=X, iters=2, seed=0)
    path = tmp_path / "index.qivf"
    save_index(index, path)
    raw = path.read_bytes()

    bad = tmp_path / "bad.qivf"
    bad.write_bytes(b"JUNK" + raw[4:])
    with pytest.raises(FormatError):
        load_index(bad)

    bad.write_bytes(raw[:-5])
    with pytest.raises(FormatError):
        load_index(bad)

    bad.write_bytes(raw + b"\0\0")
    with pytest.raises(FormatError):
        load_index(bad)

    version = raw[:4] + b"\x2a\x00\x00\x00" + raw[8:]
    bad.write_bytes(version)
    with pytest.raises(FormatError):
        load_index(bad)

    tag = bytearray(raw)
    tag[24] = 9  # layout byte after magic + five u32 fields
    bad.write_bytes(bytes(tag))
    with pytest.raises(FormatError):
        load_index(bad)
