import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lipkin_gcm import kernels, solver
from lipkin_gcm.kernels import ManyBodyKernels, assemble_many_body, estimate_one_body, make_grid
from lipkin_gcm.model import LipkinParams, exact_spectrum
from lipkin_gcm.qsim import EstimatorConfig
from lipkin_gcm.solver import DiagConfig, EmptyBasisError, VqdConfig, f_k_metric, gcm_diag, gcm_vqd, spectrum_report

from conftest import random_hermitian


def _plain(h, n, N=2):
    return ManyBodyKernels(h=np.asarray(h, dtype=float), n=np.asarray(n, dtype=float), params=LipkinParams(N), grid=make_grid(len(h)))


def _mb(exact_kernels, N, L, chi):
    return assemble_many_body(exact_kernels(L), LipkinParams(N, 1.0, chi))


def test_diag_orthonormal_example():
    sol = gcm_diag(_plain(np.diag([3.0, 1.0, 2.0]), np.eye(3)))
    assert np.allclose(sol.energies, [1, 2, 3])
    assert sol.retained_count == 3 and sol.method == "diag"


def test_diag_n2_closed_form(exact_kernels):
    sol = gcm_diag(_mb(exact_kernels, 2, 3, 1.0))
    assert np.allclose(sol.energies, [-math.sqrt(2), 0, math.sqrt(2)], atol=1e-8)


@pytest.mark.parametrize("chi", [0.2, 1.0, 2.0])
def test_diag_reproduces_exact(exact_kernels, chi):
    sol = gcm_diag(_mb(exact_kernels, 4, 5, chi))
    assert np.allclose(sol.energies, exact_spectrum(LipkinParams(4, 1.0, chi)), atol=1e-8)


def test_diag_mixing_is_n_orthonormal(exact_kernels):
    mb = _mb(exact_kernels, 4, 5, 1.0)
    sol = gcm_diag(mb)
    g = sol.mixing.conj() @ mb.n @ sol.mixing.T
    assert np.allclose(g, np.eye(5), atol=1e-8)
    assert np.allclose(sol.norms(mb.n), 1, atol=1e-8)


def test_diag_random_hermitian_with_identity_norm():
    rng = np.random.default_rng(0)
    for _ in range(20):
        h = random_hermitian(rng, 8)
        mb = ManyBodyKernels(h=h, n=np.eye(8, dtype=complex), params=LipkinParams(2), grid=make_grid(8))
        assert np.allclose(gcm_diag(mb).energies, np.linalg.eigvalsh(h), atol=1e-10)


@settings(max_examples=30)
@given(seed=st.integers(0, 2**32 - 1))
def test_diag_congruence_invariance(seed):
    rng = np.random.default_rng(seed)
    h = random_hermitian(rng, 6)
    a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    n = a @ a.conj().T + 0.5 * np.eye(6)
    t = rng.normal(size=(6, 6)) + 3 * np.eye(6)
    base = gcm_diag(ManyBodyKernels(h, n, LipkinParams(2), make_grid(6)))
    moved = gcm_diag(ManyBodyKernels(t.T @ h @ t, t.T @ n @ t, LipkinParams(2), make_grid(6)))
    scale = max(1.0, np.max(np.abs(base.energies)))
    assert np.allclose(base.energies, moved.energies, atol=1e-8 * scale * np.linalg.cond(t) ** 2)


@settings(max_examples=40, deadline=None)
@given(N=st.integers(1, 14), L=st.integers(2, 16), chi=st.floats(0, 3))
def test_variational_bound(N, L, chi):
    mb = assemble_many_body(estimate_one_body(make_grid(L), EstimatorConfig()), LipkinParams(N, 1.0, chi))
    e0 = gcm_diag(mb).energies[0]
    assert e0 >= exact_spectrum(LipkinParams(N, 1.0, chi))[0] - 1e-10


def test_diag_threshold_truncates(exact_kernels):
    mb = _mb(exact_kernels, 2, 9, 1.0)
    sol = gcm_diag(mb)
    # only N+1 = 3 independent states exist
    assert sol.retained_count == 3
    assert np.allclose(sol.energies, exact_spectrum(LipkinParams(2, 1.0, 1.0)), atol=1e-8)


def test_empty_basis_error():
    with pytest.raises(EmptyBasisError):
        gcm_diag(_plain(np.eye(2), 1e-12 * np.eye(2)))


def test_non_hermitian_rejected():
    with pytest.raises(ValueError):
        gcm_diag(_plain([[0, 1], [0, 0]], np.eye(2)))


@pytest.mark.parametrize("t", [0.0, 1.0, -1e-3])
def test_diag_config_validation(t):
    with pytest.raises(ValueError):
        DiagConfig(norm_threshold=t)


@pytest.mark.parametrize("kwargs", [dict(bound=0), dict(beta=-1), dict(lambda_norm=0), dict(restarts=0), dict(method="nelder")])
def test_vqd_config_validation(kwargs):
    with pytest.raises(ValueError):
        VqdConfig(**kwargs)


# -- vqd -------------------------------------------------------------------


def test_vqd_orthonormal_example():
    sol = gcm_vqd(_plain(np.diag([3.0, 1.0, 2.0]), np.eye(3)), VqdConfig(n_states=3))
    assert np.allclose(sol.energies, [1, 2, 3], atol=1e-6)


def test_vqd_matches_diag_n4(exact_kernels):
    mb = _mb(exact_kernels, 4, 5, 1.0)
    d = gcm_diag(mb)
    v = gcm_vqd(mb, VqdConfig(n_states=5))
    assert np.all(np.abs(v.energies - d.energies) <= 1e-4 * abs(d.energies[0]))
    assert v.diagnostics["all_converged"]


@pytest.mark.parametrize("chi", [0.2, 1.0, 2.0])
def test_vqd_properties(exact_kernels, chi):
    mb = _mb(exact_kernels, 4, 5, chi)
    v = gcm_vqd(mb, VqdConfig())
    assert np.all(np.diff(v.energies) >= -1e-6)
    g = v.mixing @ mb.n.real @ v.mixing.T
    off = g - np.diag(np.diag(g))
    assert np.max(np.abs(off)) < 1e-3
    assert np.allclose(np.diag(g), 1, atol=1e-10)
    assert sorted(v.diagnostics["deflation_order"]) == list(range(5))


def test_vqd_n8_bound(exact_kernels):
    # with bound 2 some normalized N=8 states are out of reach; bound 3 covers them
    mb = _mb(exact_kernels, 8, 9, 1.0)
    exact = exact_spectrum(LipkinParams(8, 1.0, 1.0))
    v = gcm_vqd(mb, VqdConfig(bound=3.0))
    assert np.allclose(v.energies, exact, atol=1e-4 * abs(exact[0]))


def test_vqd_cobyla_ground_state(exact_kernels):
    mb = _mb(exact_kernels, 2, 3, 1.0)
    v = gcm_vqd(mb, VqdConfig(method="cobyla", n_states=1, max_iterations=5000))
    assert v.energies[0] == pytest.approx(-math.sqrt(2), abs=1e-3)


def test_vqd_rank_error(exact_kernels):
    mb = _mb(exact_kernels, 2, 6, 1.0)
    with pytest.raises(ValueError):
        gcm_vqd(mb, VqdConfig(n_states=4))


def test_vqd_strict_reports_failure(exact_kernels):
    mb = _mb(exact_kernels, 4, 5, 1.0)
    with pytest.raises(solver.VqdConvergenceError) as info:
        gcm_vqd(mb, VqdConfig(max_iterations=1, restarts=1, strict=True))
    assert info.value.solution is not None
    assert not gcm_vqd(mb, VqdConfig(max_iterations=1, restarts=1)).diagnostics["all_converged"]


def test_vqd_deterministic(exact_kernels):
    mb = _mb(exact_kernels, 4, 5, 0.6)
    a, b = gcm_vqd(mb, VqdConfig(seed=3)), gcm_vqd(mb, VqdConfig(seed=3))
    assert np.array_equal(a.energies, b.energies)


# -- F_K -------------------------------------------------------------------


def test_f_k_examples():
    exact = [-2.0, -1.0, 0.5]
    assert f_k_metric(exact, exact, 3) == 0.0
    assert f_k_metric([-2.0 + 2.0], exact, 1) == pytest.approx(1.0)
    assert f_k_metric([-1.0, -1.0], exact, 2) == pytest.approx(math.sqrt(1.0) / (2 * 2))


def test_f_k_errors():
    with pytest.raises(ValueError):
        f_k_metric([1.0], [1.0, 2.0], 2)
    with pytest.raises(ValueError):
        f_k_metric([0.0], [0.0], 1)
    with pytest.raises(ValueError):
        f_k_metric([1.0], [1.0], 0)


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=8), st.floats(0.1, 5))
def test_f_k_nonnegative(values, e_gs):
    exact = np.array([-e_gs] + sorted(values))
    approx = exact + 0.01
    for k in range(1, len(exact) + 1):
        assert f_k_metric(approx, exact, k) > 0
        assert f_k_metric(exact, exact, k) == 0


def test_spectrum_report_missing_states():
    rep = spectrum_report([-1.0], [-1.0, 0.0, 1.0], ks=(1, 3))
    assert rep.f_k[1] == 0.0 and math.isinf(rep.f_k[3])


@pytest.mark.parametrize("method", ["diag", "vqd"])
def test_shot_convergence_n8(method):
    # median over seeds of F_{N+1} improves from 1e4 to 1e6 shots per circuit
    params = LipkinParams(8, 1.0, 1.0)
    exact = exact_spectrum(params)
    grid = make_grid(9)
    med = {}
    for shots in (10**4, 10**6):
        fs = []
        for seed in range(10):
            ob = estimate_one_body(grid, EstimatorConfig(n_shots=shots, seed=seed, assume_real=True))
            mb = assemble_many_body(ob, params)
            if method == "diag":
                e = gcm_diag(mb, DiagConfig(1e-4)).energies
            else:
                rank = int(np.sum(np.linalg.eigvalsh(mb.n) > 1e-4))
                e = gcm_vqd(mb, VqdConfig(n_states=min(9, rank), rank_threshold=1e-4)).energies
            fs.append(f_k_metric(e, exact, 9) if len(e) >= 9 else math.inf)
        med[shots] = np.median(fs)
    assert med[10**6] < med[10**4]


# -- serialization ---------------------------------------------------------


def test_solution_json_round_trip(exact_kernels):
    sol = gcm_vqd(_mb(exact_kernels, 2, 3, 1.0))
    d = json.loads(solver.solution_to_json(sol, VqdConfig()))
    back = solver.solution_from_dict(d)
    assert np.array_equal(back.energies, sol.energies)
    assert np.array_equal(back.mixing, sol.mixing)
    assert d["config"]["bound"] == 2.0
