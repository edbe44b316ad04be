import numpy as np
import pytest

from blockspectra.operators import (
    BlockPartition,
    DenseSymmetric,
    DiagonalOperator,
    as_dense,
    block_diagonal,
    condition_number,
    exact_eigenvalues,
    load_matrix_csv,
    load_spectrum_csv,
    principal_block,
    save_matrix_csv,
    save_spectrum_csv,
    symmetry_defect,
)


def test_block_diagonal_scalars():
    op = block_diagonal([DenseSymmetric([[2.0]]), DenseSymmetric([[3.0]])])
    assert np.array_equal(op.apply(np.array([1.0, 1.0])), [2.0, 3.0])


def test_block_diagonal_identity():
    op = block_diagonal([DenseSymmetric(np.eye(2)), DenseSymmetric(np.eye(3))])
    v = np.arange(5.0)
    assert np.array_equal(op.apply(v), v)


def test_block_diagonal_empty():
    with pytest.raises(ValueError):
        block_diagonal([])


def test_block_diagonal_spectrum_union(case3):
    composite = exact_eigenvalues(as_dense(case3.operator()))
    union = np.sort(np.concatenate(case3.block_eigenvalues))[::-1]
    assert np.allclose(composite, union, rtol=1e-8)


def test_block_diagonal_quadratic_form_decomposes(rng):
    sym_blocks = []
    for k in (2, 3, 4):
        g = rng.standard_normal((k, k))
        sym_blocks.append(DenseSymmetric(0.5 * (g + g.T) + np.eye(k) * 5))
    op = block_diagonal(sym_blocks)
    partition = BlockPartition([2, 3, 4])
    for _ in range(5):
        v = rng.standard_normal(9)
        total = v @ op.apply(v)
        per_block = sum(
            vl @ b.apply(vl) for b, vl in zip(sym_blocks, partition.split(v))
        )
        assert total == pytest.approx(per_block, rel=1e-12)


def test_exact_eigenvalues_diagonal():
    assert np.array_equal(exact_eigenvalues(np.diag([1.0, 2.0, 3.0])), [3.0, 2.0, 1.0])


def test_exact_eigenvalues_2x2_analytic():
    assert np.allclose(exact_eigenvalues(np.array([[2.0, 1.0], [1.0, 2.0]])), [3.0, 1.0])


def test_exact_eigenvalues_rotation_invariant(rng):
    lam = np.array([4998.0, 99.0, 1.0])
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    m = (q * lam) @ q.T
    got = exact_eigenvalues(0.5 * (m + m.T))
    assert np.allclose(got, sorted(lam, reverse=True), rtol=1e-8)


def test_exact_eigenvalues_trace_match(rng):
    g = rng.standard_normal((40, 40))
    m = 0.5 * (g + g.T)
    eigs = exact_eigenvalues(m)
    assert np.trace(m) == pytest.approx(eigs.sum(), rel=1e-8, abs=1e-8)


def test_exact_eigenvalues_rejects_nonfinite():
    bad = np.eye(3)
    bad[0, 1] = np.inf
    with pytest.raises(ValueError):
        exact_eigenvalues(bad)


def test_exact_eigenvalues_dim_cap():
    with pytest.raises(ValueError):
        exact_eigenvalues(np.zeros((2001, 2001)))


def test_condition_number():
    assert condition_number([5000.0, 1.0]) == 5000.0
    assert condition_number([7.0, 7.0]) == 1.0
    with pytest.raises(ValueError):
        condition_number([3.0, 0.0])
    with pytest.raises(ValueError):
        condition_number([3.0, -1.0])


def test_condition_number_case3(case3):
    assert condition_number(case3.eigenvalues) == pytest.approx(5000.0, rel=1e-6)


def test_dense_symmetric_exact_transpose(rng):
    g = rng.standard_normal((6, 6))
    d = DenseSymmetric(0.5 * (g + g.T))
    assert np.array_equal(d.matrix, d.matrix.T)


def test_dense_symmetric_rejects_asymmetric():
    with pytest.raises(ValueError):
        DenseSymmetric([[1.0, 2.0], [0.0, 1.0]])


def test_dense_symmetric_rejects_nonsquare():
    with pytest.raises(ValueError):
        DenseSymmetric(np.ones((2, 3)))


def test_operator_symmetry_sampled(case3, rng):
    g = rng.standard_normal((8, 8))
    ops = [
        DenseSymmetric(0.5 * (g + g.T)),
        DiagonalOperator(rng.standard_normal(7)),
        case3.operator(),
        principal_block(case3.operator(), 2, 7),
    ]
    for op in ops:
        assert symmetry_defect(op) <= 1e-10


def test_principal_block_matches_submatrix(rng):
    g = rng.standard_normal((7, 7))
    d = DenseSymmetric(0.5 * (g + g.T))
    sub = principal_block(d, 2, 5)
    assert sub.dim == 3
    v = rng.standard_normal(3)
    assert np.allclose(sub.apply(v), d.matrix[2:5, 2:5] @ v)
    generic = principal_block(DiagonalOperator(np.arange(1.0, 8.0)), 1, 4)
    assert np.allclose(generic.apply(np.ones(3)), [2.0, 3.0, 4.0])


def test_partition_validation():
    p = BlockPartition([2, 3])
    assert p.dim == 5
    assert p.ranges() == ((0, 2), (2, 5))
    with pytest.raises(ValueError):
        BlockPartition([])
    with pytest.raises(ValueError):
        BlockPartition([2, 0])


def test_matrix_csv_roundtrip(tmp_path, rng):
    m = rng.standard_normal((4, 4))
    path = tmp_path / "m.csv"
    save_matrix_csv(path, m)
    with open(path) as fh:
        assert fh.readline().startswith("c0,")
    assert np.array_equal(load_matrix_csv(path), m)


def test_spectrum_csv_roundtrip(tmp_path):
    eigs = np.array([3.25, -1.5, 0.0])
    path = tmp_path / "s.csv"
    save_spectrum_csv(path, eigs)
    assert np.array_equal(load_spectrum_csv(path), eigs)
