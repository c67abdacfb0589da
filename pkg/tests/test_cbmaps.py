import numpy as np
import pytest

from conftest import matrix_units, rand_map, rand_matrix
from opspace.cbmaps import (LinearMatrixMap, cb_norm, cb_norm_via_amplification,
                            diamond_norm, dim_bound_check, norm_lower,
                            transpose_map)
from opspace.linalg import operator_norm


def test_from_pairs_identity(rng):
    ident = LinearMatrixMap.identity(3)
    x = rand_matrix(rng, 3)
    assert np.abs(ident.apply(x) - x).max() < 1e-15


def test_from_pairs_corner_compression():
    e11 = np.zeros((2, 2), dtype=complex)
    e11[0, 0] = 1.0
    m = LinearMatrixMap.from_pairs([(e11, e11)])
    x = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=complex)
    expected = np.zeros((2, 2), dtype=complex)
    expected[0, 0] = 1.0
    assert np.abs(m.apply(x) - expected).max() < 1e-15


@pytest.mark.parametrize("n", [2, 3])
def test_transpose_map_on_matrix_units(n):
    t = transpose_map(n)
    for unit in matrix_units(n):
        assert np.abs(t.apply(unit) - unit.T).max() < 1e-15


def test_from_pairs_dimension_mismatch():
    with pytest.raises(ValueError):
        LinearMatrixMap(2, 2, [(np.zeros((3, 2)), np.zeros((2, 2)))])


def test_from_choi_round_trip(rng):
    m = rand_map(rng, 2, 3, terms=2)
    back = LinearMatrixMap.from_choi(m.choi, 2, 3)
    for unit in matrix_units(2):
        assert np.abs(m.apply(unit) - back.apply(unit)).max() < 1e-10
    assert np.abs(back.choi - m.choi).max() < 1e-12


def test_from_choi_identity(rng):
    ident = LinearMatrixMap.identity(3)
    back = LinearMatrixMap.from_choi(ident.choi, 3, 3)
    x = rand_matrix(rng, 3)
    assert np.abs(back.apply(x) - x).max() < 1e-10


def test_from_choi_zero():
    m = LinearMatrixMap.from_choi(np.zeros((4, 4)), 2, 2)
    assert m.pairs == []
    assert np.abs(m.apply(np.eye(2))).max() == 0.0


def test_from_choi_dim_mismatch():
    with pytest.raises(ValueError):
        LinearMatrixMap.from_choi(np.zeros((4, 4)), 2, 3)


def test_apply_transpose_example():
    t = transpose_map(2)
    x = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=complex)
    assert np.array_equal(t.apply(x), x.T)


def test_apply_single_pair_direct(rng):
    a, b, x = rand_matrix(rng, 3), rand_matrix(rng, 3), rand_matrix(rng, 3)
    m = LinearMatrixMap.from_pairs([(a, b)])
    assert np.abs(m.apply(x) - a @ x @ b).max() < 1e-12


def test_adjoint_pairing(rng):
    m = rand_map(rng, 2, 3)
    x, y = rand_matrix(rng, 2), rand_matrix(rng, 3)
    lhs = np.vdot(y, m.apply(x))
    rhs = np.vdot(m.adjoint().apply(y), x)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_amplify_level_one_is_same(rng):
    m = rand_map(rng, 2)
    x = rand_matrix(rng, 2)
    assert np.abs(m.amplify(1).apply(x) - m.apply(x)).max() == 0.0


def test_amplify_identity():
    amp = LinearMatrixMap.identity(2).amplify(3)
    x = np.random.default_rng(0).standard_normal((6, 6))
    assert np.abs(amp.apply(x) - x).max() < 1e-15


def test_amplified_lower_bounds_nondecreasing(rng):
    m = rand_map(rng, 2)
    values = [norm_lower(m.amplify(k), restarts=48) for k in (1, 2, 3)]
    assert values[0] <= values[1] + 1e-6
    assert values[1] <= values[2] + 1e-6


def test_norm_lower_identity():
    v = norm_lower(LinearMatrixMap.identity(3))
    assert v >= 1.0 - 1e-9
    assert v <= 1.0 + 1e-9


@pytest.mark.parametrize("n", [2, 4])
def test_norm_lower_transpose_is_one(n):
    v = norm_lower(transpose_map(n))
    assert v == pytest.approx(1.0, abs=1e-6)


def test_norm_lower_single_pair(rng):
    a, b = rand_matrix(rng, 3), rand_matrix(rng, 3)
    m = LinearMatrixMap.from_pairs([(a, b)])
    target = operator_norm(a) * operator_norm(b)
    assert norm_lower(m) >= target - 1e-6
    assert norm_lower(m) <= target + 1e-9


def test_norm_lower_monotone_in_restarts(rng):
    m = rand_map(rng, 3, terms=3)
    v8 = norm_lower(m, restarts=8)
    v32 = norm_lower(m, restarts=32)
    assert v32 >= v8


def test_norm_lower_zero_map():
    assert norm_lower(LinearMatrixMap.zero(2, 2)) == 0.0


def test_cb_norm_identity():
    assert cb_norm(LinearMatrixMap.identity(2)) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("n", [2, 3])
def test_cb_norm_transpose(n):
    assert cb_norm(transpose_map(n)) == pytest.approx(float(n), abs=1e-5)


def test_cb_norm_single_pair(rng):
    a, b = rand_matrix(rng, 3), rand_matrix(rng, 3)
    m = LinearMatrixMap.from_pairs([(a, b)])
    assert cb_norm(m) == pytest.approx(operator_norm(a) * operator_norm(b), rel=1e-6)


def test_cb_norm_zero():
    assert cb_norm(LinearMatrixMap.zero(3, 3)) == 0.0


def test_cb_norm_homogeneous(rng):
    m = rand_map(rng, 2, terms=2)
    base = cb_norm(m)
    scaled = cb_norm(m.scaled(-2.5j))
    assert scaled == pytest.approx(2.5 * base, abs=1e-8 * (1 + base))


def test_norm_below_cb(rng):
    for _ in range(3):
        m = rand_map(rng, 3, terms=2)
        assert norm_lower(m) <= cb_norm(m) + 1e-7


def test_diamond_equals_trace_cb_of_adjoint(rng):
    # the two public entry points are consistent by construction
    m = rand_map(rng, 2, terms=2)
    assert cb_norm(m) == pytest.approx(diamond_norm(m.adjoint()), abs=1e-12)


def test_cb_via_amplification_identity():
    assert cb_norm_via_amplification(LinearMatrixMap.identity(2)) == pytest.approx(1.0, abs=1e-9)


def test_cb_via_amplification_transpose():
    assert cb_norm_via_amplification(transpose_map(3)) == pytest.approx(3.0, abs=1e-4)


def test_cb_via_amplification_single_pair(rng):
    a, b = rand_matrix(rng, 2), rand_matrix(rng, 2)
    m = LinearMatrixMap.from_pairs([(a, b)])
    assert cb_norm_via_amplification(m) == pytest.approx(cb_norm(m), abs=1e-4 * cb_norm(m))


def test_amplified_ascent_stabilizes_at_cb(rng):
    for m in (LinearMatrixMap.identity(2), transpose_map(2), rand_map(rng, 2, terms=2)):
        assert cb_norm_via_amplification(m) == pytest.approx(
            cb_norm(m), abs=1e-4 * max(1.0, cb_norm(m)))


def test_dim_bound_identity():
    rep = dim_bound_check(LinearMatrixMap.identity(3))
    assert rep.passed
    assert rep.ratio == pytest.approx(1.0, abs=1e-6)
    assert rep.bound == 3


def test_dim_bound_transpose_saturates():
    rep = dim_bound_check(transpose_map(3))
    assert rep.passed
    assert rep.ratio == pytest.approx(3.0, abs=1e-4)


def test_dim_bound_single_pair(rng):
    a, b = rand_matrix(rng, 3), rand_matrix(rng, 3)
    rep = dim_bound_check(LinearMatrixMap.from_pairs([(a, b)]))
    assert rep.passed
    assert rep.ratio == pytest.approx(1.0, abs=1e-4)
    assert rep.slack_needed == 0.0


def test_choi_convention(rng):
    # C(m) = sum_ij E_ij (x) m(E_ij), input index major
    m = rand_map(rng, 2, terms=1)
    units = matrix_units(2)
    choi = sum(np.kron(unit, m.apply(unit)) for unit in units)
    assert np.abs(choi - m.choi).max() < 1e-12
