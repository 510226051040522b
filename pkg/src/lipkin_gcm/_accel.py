"""Hot numeric kernels with a numba path and a pure-numpy fallback.

Set ``LIPKIN_GCM_DISABLE_JIT=1`` before import to force the numpy path.
Both implementations are always importable under explicit names
(``*_numpy`` / ``*_numba``) so tests and benchmarks can compare them.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("LIPKIN_GCM_DISABLE_JIT", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

USING_NUMBA = HAVE_NUMBA and not _DISABLED


# ---------------------------------------------------------------------------
# many-body kernel assembly
# ---------------------------------------------------------------------------


def assemble_numpy(i, x, y, z, n_particles, epsilon, chi):
    """Hamiltonian and norm kernels from one-body tables (upper triangle, mirrored)."""
    L = i.shape[0]
    if n_particles == 1:
        h = 0.5 * epsilon * z
        n = i.copy()
    else:
        h = (0.5 * epsilon * n_particles) * i ** (n_particles - 2) * (i * z + 0.5 * chi * (x * x - y * y))
        n = i**n_particles
    upper = np.triu(np.ones((L, L), dtype=bool), 1)
    h = np.where(upper, h, np.conj(h.T))
    n = np.where(upper, n, np.conj(n.T))
    idx = np.arange(L)
    h[idx, idx] = h[idx, idx].real
    n[idx, idx] = n[idx, idx].real
    return h, n


def _cpow(a, k):
    out = 1.0 + 0.0j
    for _ in range(k):
        out *= a
    return out


def _assemble_loops(i, x, y, z, n_particles, epsilon, chi):
    L = i.shape[0]
    h = np.zeros((L, L), dtype=np.complex128)
    n = np.zeros((L, L), dtype=np.complex128)
    pref = 0.5 * epsilon * n_particles
    for a in range(L):
        for b in range(a, L):
            ia = i[a, b]
            if n_particles == 1:
                hv = 0.5 * epsilon * z[a, b]
                nv = ia
            else:
                base = _cpow(ia, n_particles - 2)
                hv = pref * base * (ia * z[a, b] + 0.5 * chi * (x[a, b] * x[a, b] - y[a, b] * y[a, b]))
                nv = base * ia * ia
            if a == b:
                h[a, a] = hv.real
                n[a, a] = nv.real
            else:
                h[a, b] = hv
                n[a, b] = nv
                h[b, a] = np.conj(hv)
                n[b, a] = np.conj(nv)
    return h, n


# ---------------------------------------------------------------------------
# deflation cost and central-difference gradient
# ---------------------------------------------------------------------------


def vqd_cost_numpy(f, h, n, prev_nf, betas, lam):
    norm = f @ n @ f
    cost = f @ h @ f + lam * (norm - 1.0) ** 2
    if prev_nf.shape[0]:
        ov = prev_nf @ f
        cost += np.sum(betas * ov * ov)
    return float(cost)


def vqd_cost_grad_numpy(f, h, n, prev_nf, betas, lam, rel_step):
    c0 = vqd_cost_numpy(f, h, n, prev_nf, betas, lam)
    g = np.empty_like(f)
    for k in range(f.shape[0]):
        step = rel_step * max(1.0, abs(f[k]))
        fp = f.copy()
        fm = f.copy()
        fp[k] += step
        fm[k] -= step
        g[k] = (vqd_cost_numpy(fp, h, n, prev_nf, betas, lam) - vqd_cost_numpy(fm, h, n, prev_nf, betas, lam)) / (
            2.0 * step
        )
    return c0, g


def _vqd_cost_loops(f, h, n, prev_nf, betas, lam):
    L = f.shape[0]
    e = 0.0
    norm = 0.0
    for a in range(L):
        ha = 0.0
        na = 0.0
        for b in range(L):
            ha += h[a, b] * f[b]
            na += n[a, b] * f[b]
        e += f[a] * ha
        norm += f[a] * na
    cost = e + lam * (norm - 1.0) * (norm - 1.0)
    for j in range(prev_nf.shape[0]):
        ov = 0.0
        for b in range(L):
            ov += prev_nf[j, b] * f[b]
        cost += betas[j] * ov * ov
    return cost


def _vqd_cost_grad_loops(f, h, n, prev_nf, betas, lam, rel_step):
    c0 = _vqd_cost_loops(f, h, n, prev_nf, betas, lam)
    L = f.shape[0]
    g = np.empty(L)
    work = f.copy()
    for k in range(L):
        step = rel_step * max(1.0, abs(f[k]))
        work[k] = f[k] + step
        cp = _vqd_cost_loops(work, h, n, prev_nf, betas, lam)
        work[k] = f[k] - step
        cm = _vqd_cost_loops(work, h, n, prev_nf, betas, lam)
        work[k] = f[k]
        g[k] = (cp - cm) / (2.0 * step)
    return c0, g


# ---------------------------------------------------------------------------
# Kraus channel application on a density matrix
# ---------------------------------------------------------------------------


def apply_kraus_numpy(rho, kraus):
    """Return sum_k K rho K^dagger for a stack of Kraus operators."""
    return np.einsum("kab,bc,kdc->ad", kraus, rho, kraus.conj())


def _apply_kraus_loops(rho, kraus):
    d = rho.shape[0]
    out = np.zeros((d, d), dtype=np.complex128)
    tmp = np.zeros((d, d), dtype=np.complex128)
    for k in range(kraus.shape[0]):
        K = kraus[k]
        for a in range(d):
            for c in range(d):
                acc = 0.0j
                for b in range(d):
                    acc += K[a, b] * rho[b, c]
                tmp[a, c] = acc
        for a in range(d):
            for e in range(d):
                acc = 0.0j
                for c in range(d):
                    acc += tmp[a, c] * np.conj(K[e, c])
                out[a, e] += acc
    return out


if HAVE_NUMBA:
    _jit = numba.njit(cache=True, fastmath=False)
    _cpow = _jit(_cpow)
    assemble_numba = _jit(_assemble_loops)
    _vqd_cost_loops = _jit(_vqd_cost_loops)
    vqd_cost_numba = _vqd_cost_loops
    vqd_cost_grad_numba = _jit(_vqd_cost_grad_loops)
    apply_kraus_numba = _jit(_apply_kraus_loops)
else:  # pragma: no cover
    assemble_numba = _assemble_loops
    vqd_cost_numba = _vqd_cost_loops
    vqd_cost_grad_numba = _vqd_cost_grad_loops
    apply_kraus_numba = _apply_kraus_loops


if USING_NUMBA:
    assemble = assemble_numba
    vqd_cost = vqd_cost_numba
    vqd_cost_grad = vqd_cost_grad_numba
    apply_kraus = apply_kraus_numba
else:
    assemble = assemble_numpy
    vqd_cost = vqd_cost_numpy
    vqd_cost_grad = vqd_cost_grad_numpy
    apply_kraus = apply_kraus_numpy


def backend_name() -> str:
    return "numba" if USING_NUMBA else "numpy"
