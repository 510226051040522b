"""Lipkin-Meshkov-Glick Hamiltonian in the maximal quasi-spin sector.

Energies use the ``eps * J_z`` convention. The Pauli-string form
``eps/2 sum Z + V/4 sum (XX - YY)`` with ``Z|0> = +|0>`` is the same
operator up to a global spin flip, so both give identical spectra; the
kernel formulas in :mod:`lipkin_gcm.kernels` use the Pauli form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class LipkinParams:
    """Model definition: particle number, level spacing and coupling.

    ``v`` is derived as ``chi * epsilon / (N - 1)`` and is zero for N=1.
    """

    n_particles: int
    epsilon: float = 1.0
    chi: float = 0.0
    v: float = field(init=False)

    def __post_init__(self):
        if int(self.n_particles) != self.n_particles or self.n_particles < 1:
            raise ValueError(f"n_particles must be a positive integer, got {self.n_particles!r}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon!r}")
        if not self.chi >= 0:
            raise ValueError(f"chi must be >= 0, got {self.chi!r}")
        object.__setattr__(self, "n_particles", int(self.n_particles))
        n = self.n_particles
        v = self.chi * self.epsilon / (n - 1) if n >= 2 else 0.0
        object.__setattr__(self, "v", float(v))


@dataclass(frozen=True)
class ExactBasis:
    j: float
    m_values: np.ndarray

    @classmethod
    def for_particles(cls, n_particles: int) -> "ExactBasis":
        j = n_particles / 2
        return cls(j=j, m_values=np.arange(-j, j + 1.0))


def build_exact_hamiltonian(params: LipkinParams) -> np.ndarray:
    """Dense (N+1)x(N+1) Hamiltonian in the |J=N/2, M> basis, M ascending."""
    basis = ExactBasis.for_particles(params.n_particles)
    j, m = basis.j, basis.m_values
    H = np.diag(params.epsilon * m)
    if params.n_particles >= 2:
        mm = m[:-2]
        coupling = 0.5 * params.v * np.sqrt((j - mm) * (j + mm + 1) * (j - mm - 1) * (j + mm + 2))
        idx = np.arange(len(mm))
        H[idx + 2, idx] = coupling
        H[idx, idx + 2] = coupling
    return H


def exact_spectrum(params: LipkinParams) -> np.ndarray:
    return np.linalg.eigvalsh(build_exact_hamiltonian(params))


def spectral_symmetry_check(params: LipkinParams) -> bool:
    """True when the spectrum is symmetric under E -> -E."""
    e = exact_spectrum(params)
    tol = 1e-10 * params.epsilon * params.n_particles
    return bool(np.all(np.abs(e + e[::-1]) <= tol))
