import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cascadenet.errors import InvalidDimension, NotHermitian
from cascadenet.operators import (OperatorMatrix, SpaceLayout, annihilation, basis_projector, commutator,
                                  creation, embed, hermitian_eigen, identity, matrix_exponential, number,
                                  partial_trace, tensor, trace_distance)


def test_annihilation_qubit_is_lowering():
    a = annihilation(2).entries
    assert np.array_equal(a, [[0, 1], [0, 0]])


def test_number_spectrum():
    assert np.allclose(np.diag(number(5).entries), np.arange(5))


def test_truncated_commutator_defect_only_at_top_level():
    d = 6
    a, ad = annihilation(d), creation(d)
    c = commutator(a, ad)
    expected = np.eye(d)
    expected[-1, -1] = 1 - d
    assert np.allclose(c, expected)


@pytest.mark.parametrize("dim", [0, 1, 2.5])
def test_invalid_dimension(dim):
    with pytest.raises(InvalidDimension):
        annihilation(dim)


def test_layout_mismatch_rejected():
    with pytest.raises(InvalidDimension):
        OperatorMatrix(SpaceLayout((2, 3)), np.eye(5))
    with pytest.raises(InvalidDimension):
        annihilation(2) @ annihilation(3)


def test_entries_are_immutable():
    op = annihilation(3)
    with pytest.raises(ValueError):
        op.entries[0, 0] = 1


def test_embed_matches_kron_and_basis_order():
    layout = SpaceLayout((2, 3))
    a1 = embed(annihilation(3), layout, 1)
    assert np.allclose(a1.entries, np.kron(np.eye(2), annihilation(3).entries))
    ket = np.zeros(6)
    ket[layout.basis_index([0, 2])] = 1
    assert np.isclose(ket @ embed(number(3), layout, 1).entries @ ket, 2)
    assert tensor(annihilation(2), identity(SpaceLayout((3,)))).layout == layout


def test_matrix_exponential_of_number_is_phase():
    u = matrix_exponential(number(4), -1j * 0.3).entries
    assert np.allclose(u, np.diag(np.exp(-0.3j * np.arange(4))))
    with pytest.raises(ValueError):
        matrix_exponential(OperatorMatrix.single(np.array([[np.nan, 0], [0, 0]])))


def test_hermitian_eigen_reconstructs_and_rejects():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h = x + x.conj().T
    eig = hermitian_eigen(h)
    assert np.all(np.diff(eig.eigenvalues) >= 0)
    assert np.allclose(eig.reconstruct(), h, atol=1e-12)
    with pytest.raises(NotHermitian):
        hermitian_eigen(x)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 3), st.integers(2, 3), st.integers(0, 2**31 - 1))
def test_partial_trace_of_product(d1, d2, seed):
    rng = np.random.default_rng(seed)
    from helpers import random_density
    r1, r2 = random_density(d1, rng), random_density(d2, rng)
    joint = np.kron(r1, r2)
    assert np.allclose(partial_trace(joint, [d1, d2], [0]), r1)
    assert np.allclose(partial_trace(joint, [d1, d2], [1]), r2)


def test_trace_distance_orthogonal_states():
    layout = SpaceLayout((2,))
    assert np.isclose(trace_distance(basis_projector(layout, [0]), basis_projector(layout, [1])), 1.0)
