import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lipkin_gcm.model import ExactBasis, LipkinParams, build_exact_hamiltonian, exact_spectrum, spectral_symmetry_check

from oracles import max_j_spectrum


def test_params_derive_v():
    p = LipkinParams(4, epsilon=2.0, chi=1.5)
    assert p.v == pytest.approx(1.5 * 2.0 / 3)
    assert LipkinParams(1, chi=3.0).v == 0.0


@pytest.mark.parametrize("kwargs", [dict(n_particles=0), dict(n_particles=2.5), dict(n_particles=2, epsilon=0.0), dict(n_particles=2, chi=-0.1)])
def test_params_reject_invalid(kwargs):
    with pytest.raises(ValueError):
        LipkinParams(**kwargs)


@given(n=st.integers(2, 40), eps=st.floats(1e-3, 1e3), chi=st.floats(0, 10))
def test_v_consistent_with_chi(n, eps, chi):
    p = LipkinParams(n, eps, chi)
    assert abs(p.v * (n - 1) / eps - chi) < 1e-12


@given(n=st.integers(1, 30))
def test_exact_basis_shape(n):
    b = ExactBasis.for_particles(n)
    assert len(b.m_values) == n + 1
    assert np.allclose(np.diff(b.m_values), 1.0)
    assert b.m_values[0] == -b.j


def test_hamiltonian_uncoupled_n2():
    H = build_exact_hamiltonian(LipkinParams(2, 1.0, 0.0))
    assert np.array_equal(H, np.diag([-1.0, 0.0, 1.0]))


def test_hamiltonian_coupling_n2():
    H = build_exact_hamiltonian(LipkinParams(2, 1.0, 1.0))
    assert H[0, 2] == pytest.approx(1.0)
    assert H[2, 0] == pytest.approx(1.0)
    assert np.allclose(np.linalg.eigvalsh(H), [-math.sqrt(2), 0, math.sqrt(2)], atol=1e-12)


@pytest.mark.parametrize("n,chi", [(4, 1.0), (3, 0.7), (6, 2.0), (8, 1.3)])
def test_hamiltonian_matches_pauli_sum(n, chi):
    p = LipkinParams(n, 1.0, chi)
    assert np.allclose(exact_spectrum(p), max_j_spectrum(n, p.epsilon, p.v), atol=1e-10)


@given(n=st.integers(1, 20), chi=st.floats(0, 5), eps=st.floats(0.1, 10))
def test_hamiltonian_structure(n, chi, eps):
    p = LipkinParams(n, eps, chi)
    H = build_exact_hamiltonian(p)
    assert H.shape == (n + 1, n + 1)
    assert np.array_equal(H, H.T)
    # only diagonal and +/-2 bands are populated
    rows, cols = np.nonzero(H)
    assert set(np.abs(rows - cols)) <= {0, 2}


def test_spectrum_examples():
    assert np.allclose(exact_spectrum(LipkinParams(2, 1.0, 1.0)), [-1.41421356, 0, 1.41421356], atol=1e-8)
    assert np.allclose(exact_spectrum(LipkinParams(1, 1.0, 5.0)), [-0.5, 0.5])
    e = exact_spectrum(LipkinParams(4, 1.0, 2.0))
    assert np.allclose(np.sort(-e), e, atol=1e-12)


@pytest.mark.parametrize("n,chi", [(2, 1.0), (4, 0.0), (8, 2.0)])
def test_symmetry_check_examples(n, chi):
    assert spectral_symmetry_check(LipkinParams(n, 1.0, chi))


@settings(max_examples=30)
@given(n=st.integers(1, 16), chi=st.floats(0, 4), eps=st.floats(0.1, 10))
def test_symmetry_and_epsilon_sign(n, chi, eps):
    p = LipkinParams(n, eps, chi)
    assert spectral_symmetry_check(p)
    # flipping eps flips the whole matrix, so the set is unchanged by symmetry
    e = exact_spectrum(p)
    assert np.allclose(np.sort(np.linalg.eigvalsh(-build_exact_hamiltonian(p))), e, atol=1e-9 * eps * n)
