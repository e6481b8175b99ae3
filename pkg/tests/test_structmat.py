import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from structblock.structmat import (
    StructureError,
    StructuredMatrix,
    f_circulant_from_vector,
    hermitian_extend,
    hermitian_toeplitz,
    reversal,
    unit_f_circulant,
)


def test_toeplitz_n2():
    S = StructuredMatrix("toeplitz", 2, [-1, 2, -1])
    assert np.array_equal(S.dense, [[2, -1], [-1, 2]])


def test_circulant_identity():
    assert np.array_equal(StructuredMatrix("circulant", 2, [1, 0]).dense, np.eye(2))


def test_hankel_n2():
    assert np.array_equal(StructuredMatrix("hankel", 2, [0, 1, 2]).dense, [[0, 1], [1, 2]])


def test_toeplitz_entry_convention():
    n = 4
    seq = np.arange(-(n - 1), n) + 10.0
    T = StructuredMatrix("toeplitz", n, seq).dense
    for i in range(n):
        for k in range(n):
            assert T[i, k] == 10 + (i - k)


def test_circulant_rows_are_shifts():
    c = np.array([1, 2, 3, 4.0])
    C = StructuredMatrix("circulant", 4, c).dense
    assert np.array_equal(C[:, 0], c)
    for k in range(1, 4):
        assert np.array_equal(C[:, k], np.roll(c, k))


def test_banded_short_and_full_forms_agree():
    short = StructuredMatrix("banded_toeplitz", 8, [-1, 2, -1], bandwidth=1)
    full = np.zeros(15)
    full[6:9] = [-1, 2, -1]
    assert np.array_equal(short.dense, StructuredMatrix("banded_toeplitz", 8, full, bandwidth=1).dense)


@pytest.mark.parametrize(
    "args",
    [
        ("toeplitz", 3, [1, 2, 3, 4, 5]),
        ("toeplitz", 4, [1, 2, 3]),
        ("circulant", 4, [1, np.nan, 0, 0]),
        ("nope", 4, [1, 2, 3, 4]),
        ("banded_toeplitz", 4, [1, 2, 3]),
    ],
)
def test_invalid_inputs(args):
    with pytest.raises(StructureError):
        StructuredMatrix(*args)


def test_banded_entries_outside_band_rejected():
    with pytest.raises(StructureError):
        StructuredMatrix("banded_toeplitz", 4, [1, 0, 0, 2, 0, 0, 0], bandwidth=1)


def test_edits_only_for_like_families():
    with pytest.raises(StructureError):
        StructuredMatrix("toeplitz", 4, np.ones(7), edits=((0, 0, 1.0),))
    with pytest.raises(StructureError):
        StructuredMatrix("toeplitz_like", 4, np.ones(7), edits=((4, 0, 1.0),))


def test_like_edits_applied_and_sparsity():
    S = StructuredMatrix("toeplitz_like", 4, np.zeros(7), edits=((1, 2, 5.0), (2, 3, 1j)))
    assert S.dense[1, 2] == 5 and S.dense[2, 3] == 1j
    assert S.d >= 2
    assert StructuredMatrix("toeplitz_like", 4, np.ones(7)).d == 1


def test_unit_f_circulant_examples():
    assert np.array_equal(unit_f_circulant(2, 1), [[0, 1], [1, 0]])
    assert np.array_equal(unit_f_circulant(2, -1), [[0, -1], [1, 0]])
    assert np.array_equal(np.linalg.matrix_power(unit_f_circulant(4, -1), 4), -np.eye(4))


def test_f_circulant_from_vector_examples():
    assert np.array_equal(f_circulant_from_vector([1, 0], -1), np.eye(2))
    assert np.array_equal(f_circulant_from_vector([0, 1], 1), unit_f_circulant(2, 1))
    assert np.array_equal(f_circulant_from_vector([3, 7], -1), [[3, -7], [7, 3]])


def test_hermitian_extend_examples():
    assert np.array_equal(hermitian_extend([[1]]), [[0, 1], [1, 0]])
    E = hermitian_extend(np.eye(2))
    assert np.array_equal(E[:2, 2:], np.eye(2)) and np.array_equal(E[2:, :2], np.eye(2))


def test_hermitian_extend_spectrum(rng):
    M = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    ev = np.sort(np.linalg.eigvalsh(hermitian_extend(M)))
    sv = np.linalg.svd(M, compute_uv=False)
    assert np.allclose(ev, np.sort(np.concatenate([sv, -sv])), atol=1e-12)


def test_reversal():
    J = reversal(4)
    assert J[0, 3] == 1 and np.array_equal(J @ J, np.eye(4))


def test_hermitian_toeplitz_is_hermitian():
    S = hermitian_toeplitz([2, 0.5 + 0.25j, 0.1, 0])
    assert np.allclose(S.dense, S.dense.conj().T)
    assert S.dense[0, 1] == 0.5 + 0.25j


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([1, -1, 2, 0.5]), st.sampled_from([2, 4, 8]))
def test_f_circulant_is_potent(f, n):
    Z = unit_f_circulant(n, f)
    assert np.allclose(np.linalg.matrix_power(Z, n), f * np.eye(n))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=7, max_size=7))
def test_hankel_is_reversed_toeplitz(h):
    H = StructuredMatrix("hankel", 4, h).dense
    assert np.allclose(H, H.T)
    T = H @ reversal(4)
    for d in range(-3, 4):
        assert np.ptp(np.diagonal(T, d)) < 1e-12
