"""Independent reference computations used only by the tests."""

from __future__ import annotations

from itertools import combinations
from math import comb, sqrt

import numpy as np
import scipy.linalg
import scipy.sparse as sp

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def expm_ry(theta):
    """exp(-i theta Y / 2) by a generic matrix exponential."""
    return scipy.linalg.expm(-0.5j * theta * PAULI["Y"])


def one_body_by_matrices(theta_l, theta_lp):
    """<0|u^dag(a) P u(b)|0> for P in I, X, Y, Z via explicit products."""
    ket0 = np.array([1, 0], dtype=complex)
    ul, ulp = expm_ry(theta_l), expm_ry(theta_lp)
    return tuple(ket0 @ ul.conj().T @ PAULI[p] @ ulp @ ket0 for p in "IXYZ")


def _site_op(op, site, n):
    out = sp.identity(1, format="csr", dtype=complex)
    for k in range(n):
        out = sp.kron(out, sp.csr_matrix(op) if k == site else sp.identity(2, dtype=complex), format="csr")
    return out


def pauli_sum_hamiltonian(n, epsilon, v):
    """eps/2 sum_a Z_a + V/4 sum_{a != b} (X_a X_b - Y_a Y_b) on 2^n states."""
    dim = 2**n
    H = sp.csr_matrix((dim, dim), dtype=complex)
    zs = [_site_op(PAULI["Z"], a, n) for a in range(n)]
    xs = [_site_op(PAULI["X"], a, n) for a in range(n)]
    ys = [_site_op(PAULI["Y"], a, n) for a in range(n)]
    for a in range(n):
        H = H + 0.5 * epsilon * zs[a]
    for a, b in combinations(range(n), 2):
        # each unordered pair appears twice in the a != b sum
        H = H + 0.5 * v * (xs[a] @ xs[b] - ys[a] @ ys[b])
    return H


def dicke_basis(n):
    """Orthonormal basis of the fully symmetric (J = N/2) subspace."""
    dim = 2**n
    weights = np.array([bin(s).count("1") for s in range(dim)])
    cols = []
    for k in range(n + 1):
        v = (weights == k).astype(float) / sqrt(comb(n, k))
        cols.append(v)
    return np.column_stack(cols)


def max_j_spectrum(n, epsilon, v):
    H = pauli_sum_hamiltonian(n, epsilon, v)
    D = dicke_basis(n)
    block = D.T @ (H @ D)
    return np.linalg.eigvalsh(0.5 * (block + block.conj().T))


def generalized_eigvals(h, n):
    """Generalized eigenvalues through scipy's dense QZ-free Hermitian solver."""
    return scipy.linalg.eigh(h, n, eigvals_only=True)
