"""Zero-noise extrapolation over folded circuits and calibration scaling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING

import numpy as np

from . import qsim
from .qsim import EstimatorConfig, Part, Pauli

if TYPE_CHECKING:
    from .kernels import OneBodyKernels

# domain tags for keyed RNG streams
GRID_STREAM = 0
CALIBRATION_STREAM = 1


@dataclass(frozen=True)
class ZneSeries:
    folds: tuple
    means: tuple
    stderrs: tuple

    def __post_init__(self):
        if not (len(self.folds) == len(self.means) == len(self.stderrs)):
            raise ValueError("folds, means and stderrs must have equal length")
        sf = self.scale_factors
        if any(b <= a for a, b in zip(sf, sf[1:])):
            raise ValueError("scale factors must be strictly increasing")

    @property
    def scale_factors(self) -> tuple:
        return tuple(2 * k + 1 for k in self.folds)


def zne_extrapolate(series: ZneSeries) -> tuple[float, float]:
    """Linear least-squares fit of mean vs (2k+1), evaluated at scale 0.

    The standard error is propagated from the per-fold standard errors
    through the (linear) intercept estimator.
    """
    if len(series.folds) < 2:
        raise ValueError("zero-noise extrapolation needs at least two folds")
    x = np.asarray(series.scale_factors, dtype=float)
    design = np.column_stack([np.ones_like(x), x])
    # row 0 of the pseudo-inverse maps data to the intercept
    weights = np.linalg.pinv(design)[0]
    mean = float(weights @ np.asarray(series.means, dtype=float))
    stderr = float(np.sqrt(np.sum((weights * np.asarray(series.stderrs, dtype=float)) ** 2)))
    return mean, stderr


def _measure(circuit: qsim.HadamardTest, config: EstimatorConfig, rng: np.random.Generator | None) -> tuple[float, float]:
    if config.exact_shots:
        p0, p1 = qsim.outcome_probabilities(circuit, config.noise)
        return p0 - p1, 0.0
    stats = qsim.run_shots(circuit, config, rng)
    return stats.mean, stats.std


def measure_folds(
    theta_l: float,
    theta_lp: float,
    pauli: Pauli,
    part: Part,
    config: EstimatorConfig,
    key: tuple,
    folds: tuple = (0,),
) -> ZneSeries:
    """Run one Hadamard test at each fold count; shots are drawn per fold."""
    base = qsim.hadamard_test_circuit(theta_l, theta_lp, pauli, part)
    means, errs = [], []
    for k in folds:
        rng = None if config.exact_shots else qsim.rng_stream(config.seed, *key, k)
        m, s = _measure(qsim.fold_circuit(base, k), config, rng)
        means.append(m)
        errs.append(s)
    return ZneSeries(tuple(folds), tuple(means), tuple(errs))


def estimate_expectation(
    theta_l: float,
    theta_lp: float,
    pauli: Pauli,
    part: Part,
    config: EstimatorConfig,
    key: tuple,
    fold_scales: dict | None = None,
) -> tuple[float, float]:
    """Mean and standard error of one kernel part, with ZNE when enabled.

    ``fold_scales`` maps fold count to a divisor applied before the fit
    (the scale-before-extrapolation ordering).
    """
    folds = config.zne_folds if config.zne else (0,)
    series = measure_folds(theta_l, theta_lp, pauli, part, config, key, folds)
    if fold_scales is not None:
        s = [fold_scales[k] for k in series.folds]
        series = ZneSeries(series.folds, tuple(m / f for m, f in zip(series.means, s)), tuple(e / f for e, f in zip(series.stderrs, s)))
    if len(series.folds) == 1:
        return series.means[0], series.stderrs[0]
    return zne_extrapolate(series)


# ---------------------------------------------------------------------------
# calibration scaling
# ---------------------------------------------------------------------------

# points where the closed-form one-body kernels are known to equal 1
CALIBRATION_POINTS = {
    Pauli.I: (0.0, 0.0, Part.REAL),
    Pauli.Z: (0.0, 0.0, Part.REAL),
    Pauli.X: (math.pi / 2, math.pi / 2, Part.REAL),
    Pauli.Y: (math.pi / 2, -math.pi / 2, Part.IMAG),
}


@dataclass(frozen=True)
class ScaleCalibration:
    scales: dict
    measured: dict
    ideal: dict = field(default_factory=lambda: {p: 1.0 for p in qsim.PAULIS})
    points: dict = field(default_factory=lambda: dict(CALIBRATION_POINTS))
    fold_scales: dict | None = None

    def __post_init__(self):
        for p, s in self.scales.items():
            if not 0.0 < s <= 2.0:
                raise ValueError(f"scale factor for {p.value} out of (0, 2]: {s}")

    @classmethod
    def identity(cls) -> "ScaleCalibration":
        ones = {p: 1.0 for p in qsim.PAULIS}
        return cls(scales=dict(ones), measured=dict(ones))

    def report(self) -> str:
        """Key-value text block: one section per operator."""
        lines = []
        for p in qsim.PAULIS:
            tl, tlp, part = self.points[p]
            lines += [
                f"[{p.value}]",
                f"point = {tl!r}, {tlp!r}, {part.value}",
                f"ideal = {self.ideal[p]:.17g}",
                f"measured = {self.measured[p]:.17g}",
                f"scale = {self.scales[p]:.17g}",
            ]
            if self.fold_scales is not None:
                for k in sorted(self.fold_scales):
                    lines.append(f"scale_fold_{k} = {self.fold_scales[k][p]:.17g}")
            lines.append("")
        return "\n".join(lines)


def _check_calibration(p: Pauli, value: float) -> None:
    if abs(value) < 0.1:
        raise RuntimeError(f"calibration for {p.value} measured {value:.4f}; backend output is meaningless")


def calibrate_scaling(config: EstimatorConfig) -> ScaleCalibration:
    """Measure the calibration circuits with the same estimator as the kernels.

    ZNE is applied to the calibration circuits when it is enabled so that
    the scale factors correct the extrapolated values.
    """
    scales, measured = {}, {}
    fold_scales = None
    per_fold = config.zne and config.scale_before_zne
    if per_fold:
        fold_scales = {k: {} for k in config.zne_folds}
    for idx, p in enumerate(qsim.PAULIS):
        tl, tlp, part = CALIBRATION_POINTS[p]
        key = (CALIBRATION_STREAM, 0, 0, idx, 0 if part is Part.REAL else 1)
        if per_fold:
            series = measure_folds(tl, tlp, p, part, config, key, config.zne_folds)
            for k, m in zip(series.folds, series.means):
                _check_calibration(p, m)
                fold_scales[k][p] = m
            value = series.means[0]
        else:
            value, _ = estimate_expectation(tl, tlp, p, part, config, key)
            _check_calibration(p, value)
        measured[p] = value
        scales[p] = value / 1.0
    return ScaleCalibration(scales=scales, measured=measured, fold_scales=fold_scales)


def apply_scaling(raw: "OneBodyKernels", cal: ScaleCalibration) -> "OneBodyKernels":
    """Divide each operator table (and its standard errors) by its scale."""
    s = cal.scales
    return replace(
        raw,
        tables={p: raw.tables[p] / s[p] for p in qsim.PAULIS},
        stderr_re={p: raw.stderr_re[p] / s[p] for p in qsim.PAULIS},
        stderr_im={p: raw.stderr_im[p] / s[p] for p in qsim.PAULIS},
        provenance="noisy-mitigated",
    )
