"""Two-qubit Hadamard-test engine (statevector and density-matrix modes).

Qubit 0 is the ancilla and the most significant bit of the basis index,
qubit 1 is the work register. The three controlled operations of a test
are simulated as one fused controlled 2x2 unitary; device noise is charged
per CNOT-equivalent (3 for an unfolded block).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from typing import Union

import numpy as np

from . import _accel

I2 = np.eye(2, dtype=complex)
PAULI_MATRICES = {
    "I": I2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)

CNOTS_PER_BLOCK = 3


class Pauli(str, Enum):
    I = "I"
    X = "X"
    Y = "Y"
    Z = "Z"

    @property
    def matrix(self) -> np.ndarray:
        return PAULI_MATRICES[self.value]


class Part(str, Enum):
    REAL = "real"
    IMAG = "imag"


PAULIS = (Pauli.I, Pauli.X, Pauli.Y, Pauli.Z)


def rz(phi: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * phi), np.exp(0.5j * phi)])


def ry_matrix(theta: float) -> np.ndarray:
    """u(theta) = exp(-i theta Y / 2)."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def ry_state(theta: float) -> np.ndarray:
    return np.array([math.cos(theta / 2), math.sin(theta / 2)])


def controlled(u: np.ndarray) -> np.ndarray:
    out = np.eye(4, dtype=complex)
    out[2:, 2:] = u
    return out


def on_ancilla(u: np.ndarray) -> np.ndarray:
    return np.kron(u, I2)


def on_work(u: np.ndarray) -> np.ndarray:
    return np.kron(I2, u)


@dataclass(frozen=True)
class HadamardTest:
    """Circuit description of one (modified) Hadamard test.

    The controlled block implements ``u^dag(theta_l) P u(theta_lp)`` so the
    ancilla expectation equals the real (or imaginary) part of
    ``<0|u^dag(theta_l) P u(theta_lp)|0>``. ``repeats`` counts block
    applications after folding (``U (U^dag U)^k`` -> ``2k+1``).
    """

    theta_l: float
    theta_lp: float
    pauli: Pauli
    part: Part
    repeats: int = 1

    @property
    def folds(self) -> int:
        return (self.repeats - 1) // 2

    @property
    def cnot_count(self) -> int:
        return CNOTS_PER_BLOCK * self.repeats

    @property
    def gates(self) -> tuple:
        """Gate list in application order: (name, qubits, parameter)."""
        seq = [("h", (0,), None)]
        if self.part is Part.IMAG:
            seq.append(("rz", (0,), -math.pi / 2))
        block = [
            ("cu", (0, 1), self.theta_lp),
            ("c" + self.pauli.value.lower(), (0, 1), None),
            ("cu_dag", (0, 1), self.theta_l),
        ]
        inverse = {"cu": "cu_dag", "cu_dag": "cu"}
        for r in range(self.repeats):
            if r % 2 == 0:
                seq.extend(block)
            else:
                seq.extend((inverse.get(n, n), q, p) for n, q, p in reversed(block))
        seq.append(("h", (0,), None))
        seq.append(("measure", (0,), None))
        return tuple(seq)

    def block_unitary(self) -> np.ndarray:
        """The 2x2 operator applied to the work qubit when the ancilla is |1>."""
        return ry_matrix(self.theta_l).conj().T @ self.pauli.matrix @ ry_matrix(self.theta_lp)

    def fused_block(self) -> np.ndarray:
        return controlled(self.block_unitary())


def hadamard_test_circuit(theta_l: float, theta_lp: float, p: Union[Pauli, str], part: Union[Part, str]) -> HadamardTest:
    return HadamardTest(float(theta_l), float(theta_lp), Pauli(p), Part(part))


def fold_circuit(circuit: HadamardTest, k: int) -> HadamardTest:
    """Replace the controlled block U by U (U^dag U)^k."""
    if k < 0:
        raise ValueError(f"fold count must be >= 0, got {k}")
    return replace(circuit, repeats=circuit.repeats * (2 * k + 1))


def _prefix(circuit: HadamardTest) -> list:
    ops = [on_ancilla(HADAMARD)]
    if circuit.part is Part.IMAG:
        ops.append(on_ancilla(rz(-math.pi / 2)))
    return ops


def _block_sequence(circuit: HadamardTest) -> list:
    u = circuit.fused_block()
    ud = u.conj().T
    return [u if r % 2 == 0 else ud for r in range(circuit.repeats)]


def final_statevector(circuit: HadamardTest) -> np.ndarray:
    psi = np.zeros(4, dtype=complex)
    psi[0] = 1.0
    for op in _prefix(circuit) + _block_sequence(circuit) + [on_ancilla(HADAMARD)]:
        psi = op @ psi
    return psi


def exact_probabilities(circuit: HadamardTest) -> tuple[float, float]:
    psi = final_statevector(circuit)
    p0 = float(np.sum(np.abs(psi[:2]) ** 2))
    p1 = float(np.sum(np.abs(psi[2:]) ** 2))
    return p0, p1


def run_exact(circuit: HadamardTest) -> float:
    """Noiseless ancilla expectation p0 - p1."""
    p0, p1 = exact_probabilities(circuit)
    return p0 - p1


# ---------------------------------------------------------------------------
# noise
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseParams:
    """Device noise surrogate. Times in microseconds, durations in ns.

    Defaults are the Lagos backend means for T1, T2, readout and CNOT
    error; the single-qubit error and gate durations are plumbing values.
    Use ``math.inf`` for T1/T2 to switch relaxation off.
    """

    t1: float = 84.23
    t2: float = 28.45
    readout_error: float = 1.44e-2
    cnot_error: float = 8.79e-3
    one_qubit_error: float = 2.5e-4
    duration_1q: float = 35.0
    duration_2q: float = 300.0
    duration_readout: float = 700.0

    def __post_init__(self):
        for name in ("readout_error", "cnot_error", "one_qubit_error"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {val}")
        if not (self.t1 > 0 and self.t2 > 0):
            raise ValueError("t1 and t2 must be positive")
        if self.t2 > 2 * self.t1:
            raise ValueError(f"t2 ({self.t2}) must not exceed 2*t1 ({2 * self.t1})")
        for name in ("duration_1q", "duration_2q", "duration_readout"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @classmethod
    def lagos(cls) -> "NoiseParams":
        return cls()

    @classmethod
    def zero(cls) -> "NoiseParams":
        return cls(t1=math.inf, t2=math.inf, readout_error=0.0, cnot_error=0.0, one_qubit_error=0.0)


def depolarizing_kraus_1q(p: float) -> np.ndarray:
    mats = [PAULI_MATRICES[k] for k in "IXYZ"]
    w = [math.sqrt(1 - 0.75 * p)] + [math.sqrt(p / 4)] * 3
    return np.array([wi * m for wi, m in zip(w, mats)])


def depolarizing_kraus_2q(p: float) -> np.ndarray:
    out = []
    for a in "IXYZ":
        for b in "IXYZ":
            w = math.sqrt(1 - 15 * p / 16) if a == b == "I" else math.sqrt(p / 16)
            out.append(w * np.kron(PAULI_MATRICES[a], PAULI_MATRICES[b]))
    return np.array(out)


def relaxation_kraus(t1: float, t2: float, duration_ns: float) -> np.ndarray:
    """Amplitude damping toward |0> composed with pure dephasing.

    Populations relax with exp(-t/T1); coherences decay with exp(-t/T2).
    """
    t = duration_ns * 1e-3
    gamma = 0.0 if math.isinf(t1) else 1.0 - math.exp(-t / t1)
    rate = (0.0 if math.isinf(t2) else 2.0 / t2) - (0.0 if math.isinf(t1) else 1.0 / t1)
    lam = 1.0 - math.exp(-t * rate)
    lam = min(max(lam, 0.0), 1.0)
    amp = [np.array([[1, 0], [0, math.sqrt(1 - gamma)]], dtype=complex), np.array([[0, math.sqrt(gamma)], [0, 0]], dtype=complex)]
    deph = [np.array([[1, 0], [0, math.sqrt(1 - lam)]], dtype=complex), np.array([[0, 0], [0, math.sqrt(lam)]], dtype=complex)]
    return np.array([d @ a for d in deph for a in amp])


def _embed(kraus: np.ndarray, qubit: int) -> np.ndarray:
    return np.array([on_ancilla(k) if qubit == 0 else on_work(k) for k in kraus])


def _compose(*stacks: np.ndarray) -> np.ndarray:
    """Kraus stack of applying ``stacks[0]`` first, then ``stacks[1]``, ..."""
    out = stacks[0]
    for s in stacks[1:]:
        out = np.array([b @ a for b in s for a in out])
    # drop exactly-zero operators (noiseless limits)
    keep = [k for k in out if np.any(k != 0)]
    return np.ascontiguousarray(keep)


@dataclass(frozen=True)
class _NoiseModel:
    after_1q_ancilla: np.ndarray
    after_cnot: np.ndarray
    before_readout: np.ndarray
    readout_error: float


@lru_cache(maxsize=64)
def _noise_model(noise: NoiseParams) -> _NoiseModel:
    relax_1q = relaxation_kraus(noise.t1, noise.t2, noise.duration_1q)
    relax_2q = relaxation_kraus(noise.t1, noise.t2, noise.duration_2q)
    relax_ro = relaxation_kraus(noise.t1, noise.t2, noise.duration_readout)
    after_1q = _compose(_embed(depolarizing_kraus_1q(noise.one_qubit_error), 0), _embed(relax_1q, 0))
    after_cnot = _compose(depolarizing_kraus_2q(noise.cnot_error), _embed(relax_2q, 0), _embed(relax_2q, 1))
    return _NoiseModel(after_1q, after_cnot, _compose(_embed(relax_ro, 0)), noise.readout_error)


def noisy_density_matrix(circuit: HadamardTest, noise: NoiseParams) -> np.ndarray:
    """Final pre-readout density matrix under the noise surrogate."""
    model = _noise_model(noise)
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = 1.0

    def unitary(u):
        return u @ rho @ u.conj().T

    for op in _prefix(circuit):
        rho = unitary(op)
        rho = _accel.apply_kraus(rho, model.after_1q_ancilla)
    for u in _block_sequence(circuit):
        rho = unitary(u)
        for _ in range(CNOTS_PER_BLOCK):
            rho = _accel.apply_kraus(rho, model.after_cnot)
    rho = unitary(on_ancilla(HADAMARD))
    rho = _accel.apply_kraus(rho, model.after_1q_ancilla)
    rho = _accel.apply_kraus(rho, model.before_readout)
    rho = 0.5 * (rho + rho.conj().T)
    lowest = np.linalg.eigvalsh(rho)[0]
    if lowest < -1e-8:
        raise RuntimeError(f"density matrix lost positivity (min eigenvalue {lowest:.3e})")
    return rho


def run_noisy(circuit: HadamardTest, noise: NoiseParams) -> tuple[float, float]:
    """Exact noisy Born probabilities (p0, p1) of the ancilla readout."""
    rho = noisy_density_matrix(circuit, noise)
    p0 = float(np.real(rho[0, 0] + rho[1, 1]))
    p0 = min(max(p0, 0.0), 1.0)
    r = noise.readout_error
    p0 = (1 - r) * p0 + r * (1 - p0)
    return p0, 1.0 - p0


# ---------------------------------------------------------------------------
# shot sampling
# ---------------------------------------------------------------------------

EXACT = "exact"


@dataclass(frozen=True)
class EstimatorConfig:
    """How one-body kernels are measured.

    ``n_shots`` is a positive integer or ``"exact"`` (infinite shots).
    ``zne`` turns on extrapolation over ``zne_folds``; ``scaling_correction``
    divides by calibration factors. ``assume_real`` measures only the
    structurally nonzero part of each kernel (Re for I, X, Z and Im for Y).
    """

    n_shots: Union[int, str] = EXACT
    seed: int = 0
    noise: NoiseParams | None = None
    zne_folds: tuple = (0, 1, 2)
    zne: bool = False
    scaling_correction: bool = False
    assume_real: bool = False
    scale_before_zne: bool = False

    def __post_init__(self):
        if self.n_shots != EXACT:
            if int(self.n_shots) != self.n_shots or self.n_shots < 1:
                raise ValueError(f"n_shots must be a positive integer or 'exact', got {self.n_shots!r}")
            object.__setattr__(self, "n_shots", int(self.n_shots))
        folds = tuple(int(k) for k in self.zne_folds)
        if 0 not in folds:
            raise ValueError("zne_folds must contain 0")
        if any(k < 0 for k in folds) or len(set(folds)) != len(folds):
            raise ValueError(f"zne_folds must be distinct non-negative integers, got {folds}")
        object.__setattr__(self, "zne_folds", tuple(sorted(folds)))
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit non-negative integer")

    @property
    def exact_shots(self) -> bool:
        return self.n_shots == EXACT

    @property
    def mode(self) -> str:
        if self.noise is not None:
            return "noisy"
        return "exact" if self.exact_shots else "shots"


@dataclass(frozen=True)
class ShotStats:
    mean: float
    std: float
    n_shots: int
    p0: float


def rng_stream(seed: int, *key: int) -> np.random.Generator:
    """Counter-based stream keyed by (seed, *key); independent of call order."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *[int(k) for k in key]])))


def outcome_probabilities(circuit: HadamardTest, noise: NoiseParams | None = None) -> tuple[float, float]:
    if noise is None:
        return exact_probabilities(circuit)
    return run_noisy(circuit, noise)


def sample_outcomes(p0: float, n_shots: int, rng: np.random.Generator) -> ShotStats:
    n0 = int(rng.binomial(n_shots, min(max(p0, 0.0), 1.0)))
    mean = (2 * n0 - n_shots) / n_shots
    std = math.sqrt(max(0.0, 1.0 - mean * mean) / n_shots)
    return ShotStats(mean=mean, std=std, n_shots=n_shots, p0=n0 / n_shots)


def run_shots(circuit: HadamardTest, config: EstimatorConfig, rng: np.random.Generator) -> ShotStats:
    """Sample ``config.n_shots`` ancilla outcomes and summarize them.

    ``std`` is the standard error sqrt((<p^2> - <p>^2) / N_sh) of the
    +/-1 outcomes.
    """
    if config.exact_shots:
        raise ValueError("run_shots needs a finite shot count")
    p0, _ = outcome_probabilities(circuit, config.noise)
    return sample_outcomes(p0, config.n_shots, rng)
