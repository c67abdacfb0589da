import numpy as np
import pytest

from conftest import matrix_units, rand_block, rand_map, rand_matrix
from opspace.cbmaps import LinearMatrixMap, cb_norm
from opspace.linalg import BlockMatrix, hs_norm, operator_norm
from opspace.schur import (DiagonalRepresentation, SchurSymbol, apply_symbol,
                           assemble_map, counterexample_report,
                           diagonal_compression_identity_check,
                           diagonal_expectation, diagonal_expectation_n,
                           kernel_bound_check, multiplier_norm,
                           representation_decay_report,
                           representation_to_symbol, scalar_factorization,
                           schur_compression, tail_multiplier_norm,
                           two_sided_map)


def rand_symbol(rng, n, d, terms=2):
    return SchurSymbol([[rand_map(rng, d, terms=terms) for _ in range(n)]
                        for _ in range(n)])


def test_scalar_detection(rng):
    sym = SchurSymbol.from_scalar(rand_matrix(rng, 3))
    assert sym.is_scalar
    generic = rand_symbol(rng, 2, 2)
    assert not generic.is_scalar
    # a grid of explicit scalar-multiple maps is detected as scalar
    eye = np.eye(2, dtype=complex)
    grid = [[LinearMatrixMap(2, 2, [(1.5j * eye, eye)]) for _ in range(2)]
            for _ in range(2)]
    assert SchurSymbol(grid).is_scalar


def test_symbol_shape_validation(rng):
    with pytest.raises(ValueError, match="square"):
        SchurSymbol([[rand_map(rng, 2)], [rand_map(rng, 2), rand_map(rng, 2)]])
    with pytest.raises(ValueError, match="fixed d"):
        SchurSymbol([[rand_map(rng, 2), rand_map(rng, 3)],
                     [rand_map(rng, 2), rand_map(rng, 2)]])


def test_apply_identity_symbol(rng):
    t = rand_block(rng, 3, 2)
    out = apply_symbol(SchurSymbol.identity(3, 2), t)
    assert np.abs(out.blocks - t.blocks).max() < 1e-15


def test_apply_convention_pinned():
    # scalar symbol [[1,2],[3,4]] on the all-ones block matrix applies the
    # (n, m) entry to block (m, n)
    sym = SchurSymbol.from_scalar([[1.0, 2.0], [3.0, 4.0]])
    out = apply_symbol(sym, BlockMatrix(np.ones((2, 2, 1, 1))))
    assert np.array_equal(out.flatten().real, [[1.0, 3.0], [2.0, 4.0]])


def test_apply_diagonal_mask(rng):
    t = rand_block(rng, 3, 1)
    sym = SchurSymbol.from_scalar(np.eye(3))
    out = apply_symbol(sym, t)
    assert np.abs(np.diag(out.flatten()) - np.diag(t.flatten())).max() < 1e-15
    off = out.flatten() - np.diag(np.diag(out.flatten()))
    assert np.abs(off).max() == 0.0


def test_apply_linear(rng):
    sym = rand_symbol(rng, 2, 2)
    s = rand_block(rng, 2, 2)
    t = rand_block(rng, 2, 2)
    lhs = apply_symbol(sym, BlockMatrix(s.blocks + 2j * t.blocks)).flatten()
    rhs = apply_symbol(sym, s).flatten() + 2j * apply_symbol(sym, t).flatten()
    assert np.abs(lhs - rhs).max() < 1e-12


def test_multiplier_norm_all_ones():
    res = multiplier_norm(SchurSymbol.identity(4))
    assert res.cb == pytest.approx(1.0, abs=1e-6)
    assert res.norm_lb >= 1.0 - 1e-6


def test_multiplier_norm_rank_one(rng):
    u = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    res = multiplier_norm(SchurSymbol.from_scalar(np.outer(u, v)))
    target = np.abs(u).max() * np.abs(v).max()
    assert res.cb == pytest.approx(target, rel=1e-6)
    assert res.norm_lb == pytest.approx(target, rel=1e-6)


def test_multiplier_norm_hadamard():
    res = multiplier_norm(SchurSymbol.from_scalar([[1.0, 1.0], [1.0, -1.0]]))
    assert res.cb == pytest.approx(np.sqrt(2.0), abs=1e-6)
    assert res.norm_lb == pytest.approx(np.sqrt(2.0), abs=1e-6)


def test_multiplier_norm_matches_generic_pipeline(rng):
    scalar = SchurSymbol.from_scalar(rand_matrix(rng, 3))
    assert multiplier_norm(scalar).cb == pytest.approx(
        cb_norm(assemble_map(scalar)), abs=1e-6)
    block = rand_symbol(rng, 2, 2)
    assert multiplier_norm(block).cb == pytest.approx(
        cb_norm(assemble_map(block)), abs=1e-6)


def test_multiplier_norm_lower_bound_below_cb(rng):
    for _ in range(3):
        res = multiplier_norm(SchurSymbol.from_scalar(rand_matrix(rng, 4)))
        assert res.norm_lb <= res.cb + 1e-7


def test_multiplier_norm_empty():
    res = multiplier_norm(SchurSymbol([], block_dim=1))
    assert res.cb == 0.0 and res.norm_lb == 0.0


def test_scalar_factorization_all_ones():
    res = scalar_factorization(SchurSymbol.identity(3))
    assert res.value == pytest.approx(1.0, abs=1e-5)
    rec = res.x @ res.y.conj().T
    assert np.abs(rec.T - np.ones((3, 3))).max() < 1e-7


def test_scalar_factorization_random(rng):
    phi = rand_matrix(rng, 4)
    sym = SchurSymbol.from_scalar(phi)
    res = scalar_factorization(sym)
    rec = np.array([[np.vdot(res.y[i], res.x[j]) for j in range(4)]
                    for i in range(4)])
    assert np.abs(rec - phi).max() < 1e-8
    norms = (np.linalg.norm(res.y, axis=1).max()
             * np.linalg.norm(res.x, axis=1).max())
    assert norms == pytest.approx(multiplier_norm(sym).cb, abs=1e-5)


def test_scalar_factorization_requires_scalar(rng):
    with pytest.raises(ValueError, match="scalar only"):
        scalar_factorization(rand_symbol(rng, 2, 2))


def test_diagonal_expectation(rng):
    t = rand_block(rng, 4, 2)
    diag = diagonal_expectation(t)
    for k in range(4):
        assert np.array_equal(diag[k], t.blocks[k, k])
    trunc = diagonal_expectation_n(t, 2)
    assert np.array_equal(trunc[:2], diag[:2])
    assert np.abs(trunc[2:]).max() == 0.0


def test_diagonal_expectation_contractive(rng):
    t = rand_block(rng, 4, 2)
    full = operator_norm(t.flatten())
    assert max(operator_norm(b) for b in diagonal_expectation(t)) <= full + 1e-12


def test_two_sided_identity(rng):
    n, d = 3, 2
    eye = BlockMatrix.from_flat(np.eye(n * d), n, d)
    psi = two_sided_map([eye], [eye])
    t = rand_block(rng, n, d)
    assert np.abs(psi(t).blocks - t.blocks).max() < 1e-14


def test_two_sided_block_diagonal_entries(rng):
    n, d = 3, 2
    left = BlockMatrix(np.einsum("kl,kij->klij", np.eye(n),
                                 np.stack([rand_matrix(rng, d) for _ in range(n)])))
    right = BlockMatrix(np.einsum("kl,kij->klij", np.eye(n),
                                  np.stack([rand_matrix(rng, d) for _ in range(n)])))
    psi = two_sided_map([left], [right])
    for p in range(n):
        for q in range(n):
            for unit in matrix_units(d):
                probe = np.zeros((n, n, d, d), dtype=complex)
                probe[p, q] = unit
                out = psi(BlockMatrix(probe))
                expected = left.blocks[p, p] @ unit @ right.blocks[q, q]
                assert np.abs(out.blocks[p, q] - expected).max() < 1e-12


def test_two_sided_linear(rng):
    n, d = 3, 2
    psi = two_sided_map([rand_block(rng, n, d) for _ in range(2)],
                        [rand_block(rng, n, d) for _ in range(2)])
    s, t = rand_block(rng, n, d), rand_block(rng, n, d)
    lhs = psi(BlockMatrix(s.blocks - 3j * t.blocks)).flatten()
    rhs = psi(s).flatten() - 3j * psi(t).flatten()
    assert np.abs(lhs - rhs).max() < 1e-12


def test_compression_of_identity(rng):
    n, d = 3, 2
    sym = schur_compression(lambda t: t, n, d)
    ident = LinearMatrixMap.identity(d)
    for p in range(n):
        for q in range(n):
            assert np.abs(sym.entries[p][q].choi - ident.choi).max() < 1e-12


def test_compression_round_trip(rng):
    sym = rand_symbol(rng, 3, 2)
    back = schur_compression(lambda t: apply_symbol(sym, t), 3, 2)
    for p in range(3):
        for q in range(3):
            assert np.abs(back.entries[p][q].choi
                          - sym.entries[p][q].choi).max() < 1e-12


def test_diagonal_compression_identity_diagonal_families(rng):
    n, d = 3, 2
    diag = lambda: BlockMatrix(np.einsum(
        "kl,kij->klij", np.eye(n),
        np.stack([rand_matrix(rng, d) for _ in range(n)])))
    rep = diagonal_compression_identity_check([diag()], [diag()])
    assert rep.max_residual < 1e-13


def test_diagonal_compression_identity_random(rng):
    rep = diagonal_compression_identity_check(
        [rand_block(rng, 4, 2) for _ in range(3)],
        [rand_block(rng, 4, 2) for _ in range(3)])
    assert rep.max_residual < 1e-12


def test_diagonal_compression_identity_zero_right(rng):
    zero = BlockMatrix(np.zeros((3, 3, 2, 2)))
    rep = diagonal_compression_identity_check(
        [rand_block(rng, 3, 2)], [zero])
    assert rep.max_residual == 0.0


def test_representation_identity_families():
    eye = np.eye(2, dtype=complex)
    rep = DiagonalRepresentation(np.broadcast_to(eye, (1, 3, 2, 2)).copy(),
                                 np.broadcast_to(eye, (1, 3, 2, 2)).copy())
    sym = representation_to_symbol(rep)
    assert sym.is_scalar
    assert np.abs(sym.scalar_matrix - np.ones((3, 3))).max() < 1e-14


def test_representation_scalar_families(rng):
    alpha = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    beta = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    eye = np.eye(2, dtype=complex)
    rep = DiagonalRepresentation(
        np.einsum("k,ij->kij", alpha, eye)[None],
        np.einsum("k,ij->kij", beta, eye)[None])
    sym = representation_to_symbol(rep)
    # entry (m, n) acts as x -> alpha_n beta_m x
    expected = np.array([[alpha[n] * beta[m] for n in range(3)] for m in range(3)])
    assert np.abs(sym.scalar_matrix - expected).max() < 1e-12


def test_representation_double_sum(rng):
    n, d, r = 3, 2, 2
    rep = DiagonalRepresentation(
        rng.standard_normal((r, n, d, d)) + 1j * rng.standard_normal((r, n, d, d)),
        rng.standard_normal((r, n, d, d)) + 1j * rng.standard_normal((r, n, d, d)))
    sym = representation_to_symbol(rep)
    t = rand_block(rng, n, d)
    out = apply_symbol(sym, t)
    direct = np.einsum("imuv,mnvw,inwx->mnux", rep.a, t.blocks, rep.b)
    assert np.abs(out.blocks - direct).max() < 1e-12


def test_decay_report_inverse_k():
    n = 5
    a = np.stack([np.eye(2, dtype=complex) / (k + 1) for k in range(n)])[None]
    rep = DiagonalRepresentation(a, a)
    report = representation_decay_report(rep)
    expected = np.array([1.0 / (k + 1) ** 2 for k in range(n)])
    assert np.abs(report.row_decay - expected).max() < 1e-14
    assert np.abs(report.col_decay - expected).max() < 1e-14


def test_decay_report_flat_profile():
    a = np.broadcast_to(np.eye(2, dtype=complex), (1, 4, 2, 2)).copy()
    report = representation_decay_report(DiagonalRepresentation(a, a))
    assert np.abs(report.row_decay - 1.0).max() < 1e-14


def test_decay_report_matches_eig_oracle(rng):
    n, d, r = 4, 2, 3
    rep = DiagonalRepresentation(
        rng.standard_normal((r, n, d, d)) + 1j * rng.standard_normal((r, n, d, d)),
        rng.standard_normal((r, n, d, d)) + 1j * rng.standard_normal((r, n, d, d)))
    report = representation_decay_report(rep)
    for k in range(n):
        ga = sum(rep.a[i, k] @ rep.a[i, k].conj().T for i in range(r))
        gb = sum(rep.b[i, k].conj().T @ rep.b[i, k] for i in range(r))
        assert report.row_decay[k] == pytest.approx(
            np.linalg.eigvalsh(ga)[-1], abs=1e-10)
        assert report.col_decay[k] == pytest.approx(
            np.linalg.eigvalsh(gb)[-1], abs=1e-10)


def test_tail_norm_full_truncation(rng):
    sym = SchurSymbol.from_scalar(rand_matrix(rng, 4))
    assert tail_multiplier_norm(sym, 4) == 0.0


def test_tail_norm_all_ones_flat():
    sym = SchurSymbol.identity(5)
    for n in range(5):
        assert tail_multiplier_norm(sym, n) == pytest.approx(1.0, abs=1e-6)


def test_tail_norm_diagonal_decay():
    sym = SchurSymbol.from_scalar(np.diag([1.0 / (k + 1) for k in range(6)]))
    for n in range(6):
        assert tail_multiplier_norm(sym, n) == pytest.approx(
            1.0 / (n + 1), abs=1e-6)


def test_tail_norm_nonincreasing(rng):
    sym = SchurSymbol.from_scalar(rand_matrix(rng, 5))
    tails = [tail_multiplier_norm(sym, n) for n in range(6)]
    for a, b in zip(tails, tails[1:]):
        assert b <= a + 1e-8


def test_counterexample_single_block():
    rows = counterexample_report(1, weights=[0.7])
    assert rows[0].block_norm == pytest.approx(0.7, abs=1e-9)
    assert rows[0].block_cb == pytest.approx(0.7, abs=1e-7)


def test_counterexample_inverse_k():
    rows = counterexample_report(3)
    for row in rows:
        assert row.block_cb == pytest.approx(1.0, abs=1e-4)
        assert row.block_norm == pytest.approx(1.0 / row.k, abs=1e-6)


def test_counterexample_inverse_k_squared():
    rows = counterexample_report(3, weights=lambda k: 1.0 / k ** 2)
    for row in rows:
        assert row.block_cb == pytest.approx(1.0 / row.k, abs=1e-4)


def test_kernel_bound_matrix_unit(rng):
    # a single rank-one block saturates ||T_k|| = ||k||_2
    blocks = np.zeros((3, 3, 2, 2), dtype=complex)
    vec = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    blocks[1, 2] = np.outer(vec, vec.conj())
    kernel = BlockMatrix(blocks)
    rep = kernel_bound_check(kernel, SchurSymbol.identity(3, 2))
    assert rep.operator_norm == pytest.approx(rep.kernel_hs, abs=1e-10)


def test_kernel_bound_identity_symbol(rng):
    kernel = rand_block(rng, 3, 2)
    rep = kernel_bound_check(kernel, SchurSymbol.identity(3, 2))
    assert rep.sup_entry_cb == pytest.approx(1.0, abs=1e-12)
    assert rep.image_margin == pytest.approx(0.0, abs=1e-10)


def test_kernel_bound_random(rng):
    for _ in range(5):
        kernel = rand_block(rng, 3, 2)
        sym = rand_symbol(rng, 3, 2)
        rep = kernel_bound_check(kernel, sym)
        assert rep.norm_margin >= -1e-10
        assert rep.image_margin >= -1e-10


def test_assemble_map_matches_apply(rng):
    sym = rand_symbol(rng, 2, 2)
    big = assemble_map(sym)
    t = rand_block(rng, 2, 2)
    lhs = big.apply(t.flatten())
    rhs = apply_symbol(sym, t).flatten()
    assert np.abs(lhs - rhs).max() < 1e-12
