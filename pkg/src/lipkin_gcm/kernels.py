"""One-qubit kernels on the angle grid and many-body kernel assembly.

The coherent generating states are products of identical single-qubit
states u(theta)|0>, so for any particle number the Hamiltonian and norm
kernels follow from four one-qubit kernels i, x, y, z per state pair.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import _accel, mitigation, qsim
from .model import LipkinParams
from .qsim import EstimatorConfig, Part, Pauli

PROVENANCES = ("exact", "shots", "noisy", "noisy-mitigated")


@dataclass(frozen=True)
class AngleGrid:
    thetas: np.ndarray

    @property
    def l_count(self) -> int:
        return len(self.thetas)

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.thetas + self.thetas[::-1]) <= tol))


def make_grid(l_count: int) -> AngleGrid:
    """L equally spaced angles in (-pi, pi), symmetric about 0.

    The end points are pulled in by pi/L so theta_0 and theta_{L-1} never
    describe the same state.
    """
    if int(l_count) != l_count or l_count < 2:
        raise ValueError(f"grid needs at least 2 angles, got {l_count!r}")
    L = int(l_count)
    delta = 1.0 / L
    step = 2 * math.pi * (1 - delta) / (L - 1)
    thetas = -math.pi * (1 - delta) + np.arange(L) * step
    # exact antisymmetry about the middle
    thetas = 0.5 * (thetas - thetas[::-1])
    return AngleGrid(thetas=thetas)


def analytic_one_body(theta_l, theta_lp):
    """Closed forms of <0|u^dag(theta_l) P u(theta_lp)|0> for P = I, X, Y, Z.

    Works elementwise on arrays.
    """
    d = 0.5 * (np.asarray(theta_l) - np.asarray(theta_lp))
    s = 0.5 * (np.asarray(theta_l) + np.asarray(theta_lp))
    i = np.cos(d) + 0j
    x = np.sin(s) + 0j
    y = 1j * np.sin(d)
    z = np.cos(s) + 0j
    return i, x, y, z


@dataclass(frozen=True)
class OneBodyKernels:
    """Complex L x L tables of the four one-qubit kernels.

    ``stderr_re`` / ``stderr_im`` hold the standard errors of the real and
    imaginary parts separately; ``stderr`` is their quadrature sum.
    """

    grid: AngleGrid
    tables: dict
    stderr_re: dict
    stderr_im: dict
    provenance: str = "exact"
    n_shots: object = qsim.EXACT

    @property
    def stderr(self) -> dict:
        return {p: np.hypot(self.stderr_re[p], self.stderr_im[p]) for p in qsim.PAULIS}

    def __getitem__(self, p) -> np.ndarray:
        return self.tables[Pauli(p)]


def _analytic_tables(grid: AngleGrid) -> dict:
    t = grid.thetas
    i, x, y, z = analytic_one_body(t[:, None], t[None, :])
    return {Pauli.I: i, Pauli.X: x, Pauli.Y: y, Pauli.Z: z}


def _parts_to_measure(p: Pauli, diagonal: bool, assume_real: bool) -> tuple:
    if diagonal:
        # Hermitian tables have real diagonals; y's is structurally zero
        return () if assume_real and p is Pauli.Y else (Part.REAL,)
    if assume_real:
        return (Part.IMAG,) if p is Pauli.Y else (Part.REAL,)
    return (Part.REAL, Part.IMAG)


def estimate_one_body(grid: AngleGrid, config: EstimatorConfig) -> OneBodyKernels:
    """Fill the kernel tables by running Hadamard tests on the upper triangle.

    Exact noiseless mode uses the closed forms directly. Lower-triangle
    entries are mirrored by Hermitian conjugation, p_{l'l} = conj(p_{ll'}).
    """
    L = grid.l_count
    zeros = {p: np.zeros((L, L)) for p in qsim.PAULIS}
    if config.mode == "exact":
        return OneBodyKernels(grid, _analytic_tables(grid), dict(zeros), {p: np.zeros((L, L)) for p in qsim.PAULIS}, "exact", qsim.EXACT)

    fold_scales = None
    if config.scaling_correction and config.zne and config.scale_before_zne:
        cal = mitigation.calibrate_scaling(config)
        fold_scales = {p: {k: cal.fold_scales[k][p] for k in config.zne_folds} for p in qsim.PAULIS}

    tables = {p: np.zeros((L, L), dtype=complex) for p in qsim.PAULIS}
    err_re = {p: np.zeros((L, L)) for p in qsim.PAULIS}
    err_im = {p: np.zeros((L, L)) for p in qsim.PAULIS}
    t = grid.thetas
    for a in range(L):
        for b in range(a, L):
            for idx, p in enumerate(qsim.PAULIS):
                for part in _parts_to_measure(p, a == b, config.assume_real):
                    key = (mitigation.GRID_STREAM, a, b, idx, 0 if part is Part.REAL else 1)
                    fs = None if fold_scales is None else fold_scales[p]
                    mean, se = mitigation.estimate_expectation(t[a], t[b], p, part, config, key, fs)
                    if part is Part.REAL:
                        tables[p][a, b] += mean
                        err_re[p][a, b] = se
                    else:
                        tables[p][a, b] += 1j * mean
                        err_im[p][a, b] = se
    for p in qsim.PAULIS:
        lower = np.tril_indices(L, -1)
        tables[p][lower] = np.conj(tables[p].T[lower])
        err_re[p][lower] = err_re[p].T[lower]
        err_im[p][lower] = err_im[p].T[lower]

    provenance = "shots" if config.noise is None else "noisy"
    out = OneBodyKernels(grid, tables, err_re, err_im, provenance, config.n_shots)
    if config.zne or fold_scales is not None:
        out = replace(out, provenance="noisy-mitigated" if config.noise is not None else provenance)
    if config.scaling_correction and fold_scales is None:
        out = mitigation.apply_scaling(out, mitigation.calibrate_scaling(config))
    return out


ROW_STREAM = 2


def estimate_row(thetas, theta_ref: float, config: EstimatorConfig) -> tuple[dict, dict]:
    """Real parts of p(theta_l, theta_ref) for each theta_l, with standard errors.

    Used for kernel-versus-angle scans at a fixed reference state.
    """
    thetas = np.asarray(thetas, dtype=float)
    values = {p: np.zeros(len(thetas)) for p in qsim.PAULIS}
    errors = {p: np.zeros(len(thetas)) for p in qsim.PAULIS}
    for a, t in enumerate(thetas):
        for idx, p in enumerate(qsim.PAULIS):
            key = (ROW_STREAM, a, 0, idx, 0)
            values[p][a], errors[p][a] = mitigation.estimate_expectation(t, theta_ref, p, Part.REAL, config, key)
    return values, errors


@dataclass(frozen=True)
class ManyBodyKernels:
    """Hamiltonian (``h``) and norm (``n``) kernel matrices.

    ``basis`` is ``"grid"`` for the raw generating states or ``"parity"``
    after :func:`parity_transform`, in which case ``parity`` labels each
    column +1 or -1.
    """

    h: np.ndarray
    n: np.ndarray
    params: LipkinParams
    grid: AngleGrid
    basis: str = "grid"
    parity: np.ndarray | None = None


def assemble_many_body(one_body: OneBodyKernels, params: LipkinParams) -> ManyBodyKernels:
    """h = (eps N/2) i^(N-2) [i z + chi/2 (x^2 - y^2)],  n = i^N.

    For N=1 the two-body term is absent and h = (eps/2) z, n = i.
    """
    tb = one_body.tables
    h, n = _accel.assemble(
        np.ascontiguousarray(tb[Pauli.I], dtype=np.complex128),
        np.ascontiguousarray(tb[Pauli.X], dtype=np.complex128),
        np.ascontiguousarray(tb[Pauli.Y], dtype=np.complex128),
        np.ascontiguousarray(tb[Pauli.Z], dtype=np.complex128),
        params.n_particles,
        float(params.epsilon),
        float(params.chi),
    )
    return ManyBodyKernels(h=h, n=n, params=params, grid=one_body.grid)


def parity_matrix(grid: AngleGrid) -> tuple[np.ndarray, np.ndarray]:
    """Columns (|theta> +/- |-theta>)/sqrt 2 for every theta >= 0 on the grid.

    Columns are ordered: all even combinations (ascending theta), then all
    odd ones. For odd L the theta=0 odd column is identically zero.
    """
    if not grid.is_symmetric():
        raise ValueError("parity combinations need a grid symmetric about 0")
    L = grid.l_count
    half = [l for l in range(L) if l >= L - 1 - l]
    cols, labels = [], []
    for sign in (+1, -1):
        for l in half:
            mirror = L - 1 - l
            v = np.zeros(L)
            v[l] += 1 / math.sqrt(2)
            v[mirror] += sign / math.sqrt(2)
            cols.append(v)
            labels.append(sign)
    return np.column_stack(cols), np.array(labels)


def parity_transform(kernels: ManyBodyKernels) -> ManyBodyKernels:
    """Congruence T^dag M T of both kernels into the +/- combination basis."""
    T, labels = parity_matrix(kernels.grid)
    h = T.T @ kernels.h @ T
    n = T.T @ kernels.n @ T
    return replace(kernels, h=0.5 * (h + h.conj().T), n=0.5 * (n + n.conj().T), basis="parity", parity=labels)


# ---------------------------------------------------------------------------
# CSV export / import
# ---------------------------------------------------------------------------

KERNEL_COLUMNS = ("l", "lp", "op", "part", "value", "stderr", "n_shots")


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


def kernels_to_csv(kernels: OneBodyKernels, header: str = "") -> str:
    buf = io.StringIO()
    if header:
        buf.write(header)
    buf.write(f"# provenance = {kernels.provenance}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(KERNEL_COLUMNS)
    L = kernels.grid.l_count
    for a in range(L):
        for b in range(L):
            for p in qsim.PAULIS:
                val = kernels.tables[p][a, b]
                w.writerow([a, b, p.value, "real", _fmt(val.real), _fmt(kernels.stderr_re[p][a, b]), kernels.n_shots])
                w.writerow([a, b, p.value, "imag", _fmt(val.imag), _fmt(kernels.stderr_im[p][a, b]), kernels.n_shots])
    return buf.getvalue()


def write_kernels(kernels: OneBodyKernels, path, header: str = "") -> None:
    Path(path).write_text(kernels_to_csv(kernels, header))


def read_kernels(path) -> OneBodyKernels:
    """Inverse of :func:`write_kernels`; the grid is rebuilt from L."""
    provenance = "exact"
    rows = []
    with open(path, newline="") as fh:
        lines = []
        for line in fh:
            if line.startswith("#"):
                if line.startswith("# provenance = "):
                    provenance = line.split("=", 1)[1].strip()
                continue
            lines.append(line)
    reader = csv.DictReader(lines)
    rows = list(reader)
    L = max(int(r["l"]) for r in rows) + 1
    grid = make_grid(L)
    tables = {p: np.zeros((L, L), dtype=complex) for p in qsim.PAULIS}
    err_re = {p: np.zeros((L, L)) for p in qsim.PAULIS}
    err_im = {p: np.zeros((L, L)) for p in qsim.PAULIS}
    n_shots = qsim.EXACT
    for r in rows:
        a, b, p = int(r["l"]), int(r["lp"]), Pauli(r["op"])
        val, se = float(r["value"]), float(r["stderr"])
        if r["part"] == "real":
            tables[p][a, b] += val
            err_re[p][a, b] = se
        else:
            tables[p][a, b] += 1j * val
            err_im[p][a, b] = se
        n_shots = r["n_shots"] if r["n_shots"] == qsim.EXACT else int(r["n_shots"])
    return OneBodyKernels(grid, tables, err_re, err_im, provenance, n_shots)
