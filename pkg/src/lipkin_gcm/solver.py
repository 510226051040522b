"""Spectra from Hamiltonian/norm kernels: Hill-Wheeler diagonalization and
variational deflation, plus the F_K deviation score."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from . import _accel
from .kernels import ManyBodyKernels


class EmptyBasisError(ValueError):
    """Every norm eigenvalue fell below the cutoff."""


class VqdConvergenceError(RuntimeError):
    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


@dataclass(frozen=True)
class DiagConfig:
    norm_threshold: float = 1e-10

    def __post_init__(self):
        if not 0.0 < self.norm_threshold < 1.0:
            raise ValueError(f"norm_threshold must lie in (0, 1), got {self.norm_threshold}")


@dataclass(frozen=True)
class VqdConfig:
    """Deflation settings. ``beta`` and ``lambda_norm`` default to 10*N."""

    bound: float = 2.0
    beta: Optional[float] = None
    lambda_norm: Optional[float] = None
    n_states: Optional[int] = None
    max_iterations: int = 2000
    gradient_tolerance: float = 1e-6
    restarts: int = 5
    seed: int = 0
    rank_threshold: float = 1e-10
    fd_step: float = 1e-7
    method: str = "l-bfgs-b"
    strict: bool = False

    def __post_init__(self):
        if not self.bound > 0:
            raise ValueError("bound must be > 0")
        if self.beta is not None and not self.beta > 0:
            raise ValueError("beta must be > 0")
        if self.lambda_norm is not None and not self.lambda_norm > 0:
            raise ValueError("lambda_norm must be > 0")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.method not in ("l-bfgs-b", "cobyla"):
            raise ValueError(f"unknown optimizer {self.method!r}")


@dataclass
class GcmSolution:
    energies: np.ndarray
    mixing: np.ndarray  # shape (n_states, L)
    norm_eigenvalues: np.ndarray
    retained_count: int
    method: str
    diagnostics: dict = field(default_factory=dict)

    def norms(self, n: np.ndarray) -> np.ndarray:
        return np.real(np.einsum("ka,ab,kb->k", self.mixing.conj(), n, self.mixing))


def _check_hermitian(kernels: ManyBodyKernels) -> None:
    for name in ("h", "n"):
        m = getattr(kernels, name)
        scale = max(1.0, float(np.max(np.abs(m))))
        if np.max(np.abs(m - m.conj().T)) > 1e-10 * scale:
            raise ValueError(f"kernel {name} is not Hermitian")


def _fix_phase(vecs: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude component of each column real positive."""
    idx = np.argmax(np.abs(vecs), axis=0)
    lead = vecs[idx, np.arange(vecs.shape[1])]
    return vecs * (np.abs(lead) / lead)


def gcm_diag(kernels: ManyBodyKernels, config: DiagConfig = DiagConfig()) -> GcmSolution:
    """Solve H f = E N f through the orthonormalized norm eigenbasis."""
    _check_hermitian(kernels)
    xi, u = np.linalg.eigh(kernels.n)
    keep = xi >= config.norm_threshold
    if not np.any(keep):
        raise EmptyBasisError(f"no norm eigenvalue >= {config.norm_threshold:g} (max {xi.max():.3e})")
    t = u[:, keep] / np.sqrt(xi[keep])
    hc = t.conj().T @ kernels.h @ t
    hc = 0.5 * (hc + hc.conj().T)
    energies, w = np.linalg.eigh(hc)
    f = _fix_phase(t @ w)
    if np.isrealobj(kernels.h) or (np.all(kernels.h.imag == 0) and np.all(kernels.n.imag == 0)):
        f = f.real
    return GcmSolution(
        energies=energies,
        mixing=np.ascontiguousarray(f.T),
        norm_eigenvalues=xi,
        retained_count=int(keep.sum()),
        method="diag",
        diagnostics={"norm_threshold": config.norm_threshold, "basis": kernels.basis},
    )


def _projected_gradient(f, g, bound):
    pg = g.copy()
    pg[(f >= bound) & (g < 0)] = 0.0
    pg[(f <= -bound) & (g > 0)] = 0.0
    return float(np.max(np.abs(pg)))


def gcm_vqd(kernels: ManyBodyKernels, config: VqdConfig = VqdConfig()) -> GcmSolution:
    """Sequential penalty minimizations for states of increasing energy.

    State K minimizes, over real coefficients in [-bound, bound],
    ``f h f + lambda (f n f - 1)^2 + sum_j beta |f_j n f|^2`` with the
    previously found (normalized) states f_j. Each minimizer is rescaled
    to unit norm before it is stored.
    """
    _check_hermitian(kernels)
    N = kernels.params.n_particles
    h = np.ascontiguousarray(kernels.h.real, dtype=float)
    n = np.ascontiguousarray(kernels.n.real, dtype=float)
    L = h.shape[0]
    beta = 10.0 * N if config.beta is None else config.beta
    lam = 10.0 * N if config.lambda_norm is None else config.lambda_norm
    xi = np.linalg.eigvalsh(kernels.n)
    rank = int(np.sum(xi > config.rank_threshold))
    n_states = rank if config.n_states is None else config.n_states
    if n_states < 1:
        raise ValueError("n_states must be >= 1")
    if n_states > rank:
        raise ValueError(f"requested {n_states} states but the norm matrix has rank {rank}")

    bounds = [(-config.bound, config.bound)] * L
    states, energies, info = [], [], []
    for k in range(n_states):
        prev = np.ascontiguousarray(np.array([n @ s for s in states]).reshape(len(states), L))
        betas = np.full(len(states), beta)
        rng = np.random.default_rng(np.random.SeedSequence([config.seed, k]))

        def fun(f):
            return _accel.vqd_cost_grad(f, h, n, prev, betas, lam, config.fd_step)

        def cost(f):
            return _accel.vqd_cost(f, h, n, prev, betas, lam)

        best = None
        for _ in range(config.restarts):
            x0 = rng.uniform(-0.5, 0.5, L)
            if config.method == "l-bfgs-b":
                res = minimize(
                    fun,
                    x0,
                    jac=True,
                    method="L-BFGS-B",
                    bounds=bounds,
                    options={"maxiter": config.max_iterations, "gtol": config.gradient_tolerance, "ftol": 1e-15, "maxls": 50},
                )
            else:
                res = minimize(cost, x0, method="COBYLA", bounds=bounds, options={"maxiter": config.max_iterations, "tol": 1e-12})
            _, g = fun(np.ascontiguousarray(res.x))
            pgrad = _projected_gradient(res.x, g, config.bound)
            if best is None or res.fun < best[0]:
                best = (float(res.fun), res.x.copy(), pgrad, int(res.nit) if hasattr(res, "nit") else int(res.nfev))
        c, f, pgrad, nit = best
        norm = float(f @ n @ f)
        ok = pgrad <= config.gradient_tolerance * max(1.0, abs(c))
        if norm > 0:
            f = f / math.sqrt(norm)
            e = float(f @ h @ f)
        else:
            ok = False
            e = math.nan
        states.append(f)
        energies.append(e)
        info.append({"state": k, "cost": c, "projected_gradient": pgrad, "iterations": nit, "converged": bool(ok), "raw_norm": norm})

    mixing = np.array(states)
    energies = np.array(energies)
    overlaps = mixing @ n @ mixing.T
    order = np.argsort(energies, kind="stable")
    sol = GcmSolution(
        energies=energies[order],
        mixing=mixing[order],
        norm_eigenvalues=xi,
        retained_count=n_states,
        method="vqd",
        diagnostics={
            "states": [info[i] for i in order],
            "deflation_order": order.tolist(),
            "max_offdiag_overlap": float(np.max(np.abs(overlaps - np.diag(np.diag(overlaps))))) if n_states > 1 else 0.0,
            "all_converged": all(d["converged"] for d in info),
            "beta": beta,
            "lambda_norm": lam,
        },
    )
    if config.strict and not sol.diagnostics["all_converged"]:
        bad = [d["state"] for d in info if not d["converged"]]
        raise VqdConvergenceError(f"deflation did not converge for states {bad}", sol)
    return sol


def f_k_metric(approx: Sequence[float], exact: Sequence[float], k: int) -> float:
    """RMS deviation of the first k energies divided by k |E_gs|."""
    approx = np.asarray(approx, dtype=float)
    exact = np.asarray(exact, dtype=float)
    if k < 1 or len(approx) < k or len(exact) < k:
        raise ValueError(f"need at least {k} energies in both lists")
    e_gs = exact[0]
    if e_gs == 0:
        raise ValueError("exact ground-state energy is zero; F_K undefined")
    return float(np.sqrt(np.sum((approx[:k] - exact[:k]) ** 2)) / (abs(e_gs) * k))


@dataclass
class SpectrumReport:
    f_k: dict
    per_state_errors: np.ndarray
    e_gs: float


def spectrum_report(approx, exact, ks: Sequence[int]) -> SpectrumReport:
    approx = np.asarray(approx, dtype=float)
    exact = np.asarray(exact, dtype=float)
    m = min(len(approx), len(exact))
    fk = {k: (f_k_metric(approx, exact, k) if k <= m else math.inf) for k in ks}
    return SpectrumReport(f_k=fk, per_state_errors=np.abs(approx[:m] - exact[:m]), e_gs=float(exact[0]))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def solution_to_dict(sol: GcmSolution, config=None) -> dict:
    mixing = np.asarray(sol.mixing)
    out = {
        "method": sol.method,
        "energies": sol.energies,
        "mixing_real": mixing.real,
        "mixing_imag": mixing.imag if np.iscomplexobj(mixing) else np.zeros_like(mixing),
        "norm_eigenvalues": sol.norm_eigenvalues,
        "retained_count": sol.retained_count,
        "diagnostics": sol.diagnostics,
    }
    if config is not None:
        out["config"] = asdict(config)
    return _jsonable(out)


def solution_from_dict(d: dict) -> GcmSolution:
    mixing = np.asarray(d["mixing_real"], dtype=float) + 1j * np.asarray(d["mixing_imag"], dtype=float)
    if not np.any(mixing.imag):
        mixing = mixing.real
    return GcmSolution(
        energies=np.asarray([float(e) for e in d["energies"]]),
        mixing=mixing,
        norm_eigenvalues=np.asarray(d["norm_eigenvalues"], dtype=float),
        retained_count=int(d["retained_count"]),
        method=d["method"],
        diagnostics=d.get("diagnostics", {}),
    )


def solution_to_json(sol: GcmSolution, config=None) -> str:
    return json.dumps(solution_to_dict(sol, config), indent=2, sort_keys=True)
