import numpy as np
import pytest

from kostant_toda import (
    LatticeState,
    a_block,
    b_block,
    block_at,
    c0_block,
    c0_block_inv,
    c_block,
    commutator,
    d_block,
    norm_bound,
    random_state,
)


def test_state_validation():
    a = np.zeros(6, dtype=complex)
    b = np.ones(5, dtype=complex)
    c = np.ones(4, dtype=complex)
    st = LatticeState(a, b, c)
    assert st.m == 6
    with pytest.raises(ValueError):
        LatticeState(a[:5], b[:4], c[:3])  # odd m
    with pytest.raises(ValueError):
        LatticeState(a[:2], b[:1], c[:0])  # m < 4
    with pytest.raises(ValueError):
        LatticeState(a, b[:3], c)  # wrong b length
    with pytest.raises(ValueError):
        LatticeState(a, b, np.array([1.0, 0.0, 1.0, 1.0], dtype=complex))  # zero c


def test_dense_band_layout():
    rng = np.random.default_rng(7)
    a = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    b = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    c = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    J = LatticeState(a, b, c).dense()
    assert np.array_equal(np.diagonal(J, 1), np.ones(5))
    assert np.array_equal(np.diagonal(J), a)
    assert np.array_equal(np.diagonal(J, -1), b)
    assert np.array_equal(np.diagonal(J, -2), c)
    assert np.count_nonzero(np.triu(J, 2)) == 0
    assert np.count_nonzero(np.tril(J, -3)) == 0


def test_lower_dense_strips_upper_part():
    st = random_state(3, 8)
    L = st.lower_dense()
    assert np.array_equal(L, np.tril(st.dense(), -1))


def test_block_partition():
    st = random_state(1, 8)
    J = st.dense()
    # 2x2 block (i, j) covers rows 2i-1, 2i and cols 2j-1, 2j (1-based)
    assert np.array_equal(block_at(J, 1, 1), J[0:2, 0:2])
    assert np.array_equal(block_at(J, 3, 2), J[4:6, 2:4])


def test_named_blocks_match_dense():
    st = random_state(2, 10)
    J = st.dense()
    assert np.array_equal(a_block(), np.array([[0, 0], [1, 0]], dtype=complex))
    for n in range(1, 5):
        assert np.array_equal(b_block(st, n), block_at(J, n, n))
    for n in range(1, 4):
        assert np.array_equal(c_block(st, n), block_at(J, n + 1, n))
    # superdiagonal blocks are all A
    for n in range(1, 5):
        assert np.array_equal(block_at(J, n, n + 1), a_block())
    # D_n is the diagonal block of the strictly lower part
    L = st.lower_dense()
    for n in range(0, 5):
        assert np.array_equal(d_block(st, n), block_at(L, n + 1, n + 1))


def test_c0_block_and_inverse():
    a1 = 0.3 - 1.2j
    c0 = c0_block(a1)
    assert np.array_equal(c0, np.array([[1, 0], [-a1, 1]]))
    assert np.allclose(c0 @ c0_block_inv(a1), np.eye(2), atol=1e-15)


def test_commutator_antisymmetry():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    Y = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    assert np.allclose(commutator(X, Y), -commutator(Y, X))
    assert np.allclose(commutator(X, X), 0)


def test_norm_bound_dominates_spectrum():
    for seed in range(6):
        st = random_state(seed, 12)
        rho = norm_bound(st)
        assert np.max(np.abs(np.linalg.eigvals(st.dense()))) <= rho
        # row sums of |J|, with the unit superdiagonal charged to every row
        row_sums = np.sum(np.abs(st.dense()), axis=1)
        assert np.max(row_sums) <= rho <= np.max(row_sums) + 1.0
        assert rho >= 1.0


def test_random_state_deterministic_and_bounded():
    s1 = random_state(11, 10)
    s2 = random_state(11, 10)
    assert np.array_equal(s1.a, s2.a)
    assert np.array_equal(s1.b, s2.b)
    assert np.array_equal(s1.c, s2.c)
    assert random_state(12, 10).a[0] != s1.a[0]
    assert np.all(np.abs(s1.a) <= 1) and np.all(np.abs(s1.b) <= 1)
    assert np.all(np.abs(s1.c) >= 0.2) and np.all(np.abs(s1.c) <= 1)


def test_copy_is_deep():
    st = random_state(0, 8)
    cp = st.copy()
    cp.a[0] = 99.0
    assert st.a[0] != 99.0
