"""Command-line harness: kernels, spectrum, noise-study, shot-study.

Every CSV starts with a comment block echoing the full configuration
(``# config.<key> = <value>``); passing such a CSV back through
``--config`` reproduces the run.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, _accel, kernels, mitigation, qsim, solver
from .model import LipkinParams, exact_spectrum
from .qsim import EstimatorConfig, NoiseParams

log = logging.getLogger("lipkin_gcm")

DEFAULT_CHI_SWEEP = (0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 4
    epsilon: float = 1.0
    chi: Optional[float] = None
    chi_sweep: tuple = DEFAULT_CHI_SWEEP
    grid_l: Optional[int] = None
    mode: str = "exact"
    shots: object = 1000
    seed: int = 0
    noise: str = "none"
    t1: float = 84.23
    t2: float = 28.45
    readout_error: float = 1.44e-2
    cnot_error: float = 8.79e-3
    one_qubit_error: float = 2.5e-4
    duration_1q: float = 35.0
    duration_2q: float = 300.0
    duration_readout: float = 700.0
    mitigate: str = "none"
    zne_folds: tuple = (0, 1, 2)
    scale_before_zne: bool = False
    assume_real: bool = False
    solver: str = "diag"
    norm_threshold: Optional[float] = None
    vqd_bound: float = 2.0
    vqd_restarts: int = 5
    vqd_max_iterations: int = 2000
    vqd_seed: int = 0
    theta_ref: Optional[float] = None
    shots_list: tuple = (100, 1000, 10000)
    seeds: int = 10
    out: str = "."

    # ---- derived views -------------------------------------------------

    @property
    def l_count(self) -> int:
        return self.grid_l if self.grid_l is not None else self.n + 1

    @property
    def chis(self) -> tuple:
        return (self.chi,) if self.chi is not None else tuple(self.chi_sweep)

    @property
    def noisy(self) -> bool:
        return self.mode == "noisy"

    def noise_params(self) -> NoiseParams:
        return NoiseParams(
            t1=self.t1,
            t2=self.t2,
            readout_error=self.readout_error,
            cnot_error=self.cnot_error,
            one_qubit_error=self.one_qubit_error,
            duration_1q=self.duration_1q,
            duration_2q=self.duration_2q,
            duration_readout=self.duration_readout,
        )

    def estimator(self, shots=None, seed=None, mitigate=None) -> EstimatorConfig:
        mitigate = self.mitigate if mitigate is None else mitigate
        shots = self.shots if shots is None else shots
        if self.mode == "exact":
            shots = qsim.EXACT
        return EstimatorConfig(
            n_shots=shots,
            seed=self.seed if seed is None else seed,
            noise=self.noise_params() if self.noisy else None,
            zne_folds=self.zne_folds,
            zne="zne" in mitigate,
            scaling_correction="scale" in mitigate,
            assume_real=self.assume_real,
            scale_before_zne=self.scale_before_zne,
        )

    def threshold(self) -> float:
        if self.norm_threshold is not None:
            return self.norm_threshold
        return 1e-10 if self.mode == "exact" else 1e-4

    def vqd_config(self) -> solver.VqdConfig:
        return solver.VqdConfig(
            bound=self.vqd_bound,
            restarts=self.vqd_restarts,
            max_iterations=self.vqd_max_iterations,
            seed=self.vqd_seed,
            rank_threshold=self.threshold(),
        )

    def methods(self) -> tuple:
        return ("diag", "vqd") if self.solver == "both" else (self.solver,)


CHOICES = {
    "mode": ("exact", "shots", "noisy"),
    "noise": ("none", "lagos"),
    "mitigate": ("none", "zne", "scale", "zne+scale"),
    "solver": ("diag", "vqd", "both"),
}


def _parse_float(text: str) -> float:
    t = str(text).strip().lower().replace(" ", "")
    if "pi" in t:
        # accepts forms such as pi, -pi, pi/3, 2pi/3, 2*pi/3
        sign = -1.0 if t.startswith("-") else 1.0
        t = t.lstrip("+-")
        num, _, den = t.partition("/")
        coef = num.replace("pi", "").rstrip("*") or "1"
        return sign * float(coef) * math.pi / (float(den) if den else 1.0)
    return float(t)


def _parse_list(text, item):
    if isinstance(text, (list, tuple)):
        return tuple(item(v) for v in text)
    parts = [p for p in str(text).replace(";", ",").split(",") if p.strip()]
    return tuple(item(p.strip()) for p in parts)


def _parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _parse_shots(text):
    if str(text).strip().lower() == qsim.EXACT:
        return qsim.EXACT
    value = float(text)
    if value != int(value) or value < 1:
        raise ConfigError(f"shots must be a positive integer or 'exact', got {text!r}")
    return int(value)


def _optional(parser):
    def parse(text):
        if text is None or str(text).strip().lower() in ("none", "null", ""):
            return None
        return parser(text)

    return parse


PARSERS = {
    "n": int,
    "epsilon": _parse_float,
    "chi": _optional(_parse_float),
    "chi_sweep": lambda t: _parse_list(t, _parse_float),
    "grid_l": _optional(int),
    "mode": str,
    "shots": _parse_shots,
    "seed": int,
    "noise": str,
    "t1": _parse_float,
    "t2": _parse_float,
    "readout_error": _parse_float,
    "cnot_error": _parse_float,
    "one_qubit_error": _parse_float,
    "duration_1q": _parse_float,
    "duration_2q": _parse_float,
    "duration_readout": _parse_float,
    "mitigate": str,
    "zne_folds": lambda t: _parse_list(t, int),
    "scale_before_zne": _parse_bool,
    "assume_real": _parse_bool,
    "solver": str,
    "norm_threshold": _optional(_parse_float),
    "vqd_bound": _parse_float,
    "vqd_restarts": int,
    "vqd_max_iterations": int,
    "vqd_seed": int,
    "theta_ref": _optional(_parse_float),
    "shots_list": lambda t: _parse_list(t, _parse_shots),
    "seeds": int,
    "out": str,
}


def _render(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ",".join(_render(v) for v in value)
    return str(value)


def config_echo(config: ExperimentConfig, command: str) -> str:
    lines = [f"# lipkin-gcm {__version__} {command}"]
    for f in fields(ExperimentConfig):
        lines.append(f"# config.{f.name} = {_render(getattr(config, f.name))}")
    return "\n".join(lines) + "\n"


def _canonical_key(key: str) -> str:
    key = key.strip().replace("-", "_").lower()
    aliases = {"l": "grid_l", "grid": "grid_l", "n_particles": "n"}
    return aliases.get(key, key)


def _coerce(raw: dict) -> dict:
    known = {f.name for f in fields(ExperimentConfig)}
    out = {}
    for key, value in raw.items():
        k = _canonical_key(key)
        if k not in known:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            out[k] = PARSERS[k](value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from None
    return out


def read_config_file(path) -> dict:
    """Flat ``key = value`` text, JSON, or the echo block of an output CSV."""
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        return _coerce({k: (_render(v) if isinstance(v, list) else v) for k, v in data.items()})
    raw = {}
    echo = "# config."
    for line in text.splitlines():
        line = line.strip()
        if line.startswith(echo):
            line = line[len(echo):]
        elif not line or line.startswith("#"):
            continue
        elif "=" not in line and ":" not in line:
            continue
        sep = "=" if "=" in line else ":"
        key, _, value = line.partition(sep)
        raw[key.strip()] = value.strip()
    return _coerce(raw)


def validate(config: ExperimentConfig) -> ExperimentConfig:
    for key, allowed in CHOICES.items():
        if getattr(config, key) not in allowed:
            raise ConfigError(f"{key} must be one of {allowed}, got {getattr(config, key)!r}")
    if config.noise == "lagos" and config.mode != "noisy":
        config = replace(config, mode="noisy")
    if config.n < 1:
        raise ConfigError("n must be >= 1")
    if config.l_count < 2:
        raise ConfigError("grid_l must be >= 2")
    if not config.chis:
        raise ConfigError("empty chi sweep")
    if any(c < 0 for c in config.chis):
        raise ConfigError("chi must be >= 0")
    if config.seeds < 1:
        raise ConfigError("seeds must be >= 1")
    if config.norm_threshold is not None and not 0 < config.norm_threshold < 1:
        raise ConfigError("norm_threshold must lie in (0, 1)")
    try:
        config.estimator()
        if config.noisy:
            config.noise_params()
        config.vqd_config()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return config


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.17g}"


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header: str, columns, rows, footer=()) -> str:
    buf = io.StringIO()
    buf.write(header)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    for line in footer:
        buf.write(f"# {line}\n")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _kernel_errors(measured: kernels.OneBodyKernels, exact: kernels.OneBodyKernels):
    rows = []
    for p in qsim.PAULIS:
        for part, take in (("real", np.real), ("imag", np.imag)):
            err = np.abs(take(measured.tables[p]) - take(exact.tables[p]))
            se = measured.stderr_re[p] if part == "real" else measured.stderr_im[p]
            rows.append((p.value, part, float(err.max()), float(err.mean()), float(se.mean())))
    return rows


def mean_kernel_error(measured: kernels.OneBodyKernels, exact: kernels.OneBodyKernels) -> float:
    return float(np.mean([np.abs(measured.tables[p] - exact.tables[p]).mean() for p in qsim.PAULIS]))


def cmd_kernels(config: ExperimentConfig) -> dict:
    out = Path(config.out)
    head = config_echo(config, "kernels")
    grid = kernels.make_grid(config.l_count)
    est = config.estimator()
    measured = kernels.estimate_one_body(grid, est)
    exact = kernels.estimate_one_body(grid, EstimatorConfig())
    files = {}
    path = out / "kernels.csv"
    _write_atomic(path, kernels.kernels_to_csv(measured, head))
    files["kernels"] = path
    summary = _kernel_errors(measured, exact)
    path = out / "kernel_summary.csv"
    _write_atomic(path, _csv_text(head, ("op", "part", "max_abs_error", "mean_abs_error", "mean_stderr"), summary))
    files["summary"] = path
    if config.theta_ref is not None:
        values, errors = kernels.estimate_row(grid.thetas, config.theta_ref, est)
        ideal = kernels.analytic_one_body(grid.thetas, config.theta_ref)
        rows = []
        for a, t in enumerate(grid.thetas):
            for p, ex in zip(qsim.PAULIS, ideal):
                rows.append((t, config.theta_ref, p.value, "real", values[p][a], errors[p][a], float(np.real(ex[a]))))
        path = out / "kernel_scan.csv"
        _write_atomic(path, _csv_text(head, ("theta_l", "theta_ref", "op", "part", "value", "stderr", "exact"), rows))
        files["scan"] = path
    return files


def _solve(method: str, mb: kernels.ManyBodyKernels, config: ExperimentConfig, n_exact: int) -> solver.GcmSolution:
    if method == "diag":
        return solver.gcm_diag(mb, solver.DiagConfig(config.threshold()))
    xi = np.linalg.eigvalsh(mb.n)
    rank = int(np.sum(xi > config.threshold()))
    return solver.gcm_vqd(mb, replace(config.vqd_config(), n_states=max(1, min(n_exact, rank))))


def _fk_pair(energies, exact, n):
    rep = solver.spectrum_report(energies, exact, (1, n + 1))
    return rep.f_k[1], rep.f_k[n + 1]


def cmd_spectrum(config: ExperimentConfig) -> dict:
    out = Path(config.out)
    head = config_echo(config, "spectrum")
    grid = kernels.make_grid(config.l_count)
    one_body = kernels.estimate_one_body(grid, config.estimator())
    rows, fk_rows, errors, solutions = [], [], [], []
    for chi in config.chis:
        params = LipkinParams(config.n, config.epsilon, chi)
        exact = exact_spectrum(params)
        mb = kernels.assemble_many_body(one_body, params)
        for method in config.methods():
            try:
                sol = _solve(method, mb, config, len(exact))
            except (ValueError, RuntimeError) as exc:
                errors.append(f"error: chi={_fmt(chi)} method={method}: {exc}")
                log.warning("chi=%s %s failed: %s", chi, method, exc)
                continue
            for idx, e in enumerate(sol.energies):
                rows.append((chi, idx, method, e, exact[idx] if idx < len(exact) else math.nan))
            if exact[0] != 0:
                f1, fn = _fk_pair(sol.energies, exact, config.n)
                fk_rows.append((chi, method, 1, f1))
                fk_rows.append((chi, method, config.n + 1, fn))
            entry = solver.solution_to_dict(sol)
            entry["chi"] = chi
            solutions.append(entry)
    files = {"spectrum": out / "spectrum.csv", "fk": out / "spectrum_fk.csv", "solutions": out / "solutions.json"}
    _write_atomic(files["spectrum"], _csv_text(head, ("chi", "state_index", "method", "energy", "exact_energy"), rows, errors))
    _write_atomic(files["fk"], _csv_text(head, ("chi", "method", "k", "f_k"), fk_rows))
    _write_atomic(files["solutions"], json.dumps({"config": solver._jsonable(vars_of(config)), "solutions": solutions}, indent=1, sort_keys=True) + "\n")
    return files


def vars_of(config: ExperimentConfig) -> dict:
    return {f.name: getattr(config, f.name) for f in fields(config)}


def cmd_noise_study(config: ExperimentConfig) -> dict:
    if not config.noisy:
        raise ConfigError("noise-study needs --mode noisy (or --noise lagos)")
    mitigate = config.mitigate if config.mitigate != "none" else "zne+scale"
    config = replace(config, mitigate=mitigate)
    out = Path(config.out)
    head = config_echo(config, "noise-study")
    grid = kernels.make_grid(config.l_count)
    exact_kb = kernels.estimate_one_body(grid, EstimatorConfig())
    raw = kernels.estimate_one_body(grid, config.estimator(mitigate="none"))
    mitigated = kernels.estimate_one_body(grid, config.estimator())
    cal = mitigation.calibrate_scaling(config.estimator())
    rows, errors = [], []
    for chi in config.chis:
        params = LipkinParams(config.n, config.epsilon, chi)
        exact = exact_spectrum(params)
        row = [chi]
        try:
            for kb in (raw, mitigated):
                sol = solver.gcm_diag(kernels.assemble_many_body(kb, params), solver.DiagConfig(config.threshold()))
                f1, fn = _fk_pair(sol.energies, exact, config.n)
                row += [f1, fn, abs(sol.energies[0] - exact[0]) / abs(exact[0])]
        except (ValueError, RuntimeError) as exc:
            errors.append(f"error: chi={_fmt(chi)}: {exc}")
            continue
        rows.append(tuple(row))
    summary = [
        f"kernel_mean_abs_error_raw = {_fmt(mean_kernel_error(raw, exact_kb))}",
        f"kernel_mean_abs_error_mitigated = {_fmt(mean_kernel_error(mitigated, exact_kb))}",
    ]
    files = {"study": out / "noise_study.csv", "calibration": out / "calibration.txt"}
    cols = ("chi", "f1_raw", "fn1_raw", "gs_rel_error_raw", "f1_mitigated", "fn1_mitigated", "gs_rel_error_mitigated")
    _write_atomic(files["study"], _csv_text(head, cols, rows, summary + errors))
    _write_atomic(files["calibration"], head + cal.report())
    return files


def cmd_shot_study(config: ExperimentConfig) -> dict:
    out = Path(config.out)
    head = config_echo(config, "shot-study")
    grid = kernels.make_grid(config.l_count)
    budgets = (qsim.EXACT,) if config.mode == "exact" else tuple(config.shots_list)
    seeds = (config.seed,) if config.mode == "exact" else tuple(config.seed + s for s in range(config.seeds))
    n = config.n
    runs = []
    for shots in budgets:
        for seed in seeds:
            one_body = kernels.estimate_one_body(grid, config.estimator(shots=shots, seed=seed))
            for chi in config.chis:
                params = LipkinParams(n, config.epsilon, chi)
                exact = exact_spectrum(params)
                mb = kernels.assemble_many_body(one_body, params)
                for method in config.methods():
                    try:
                        sol = _solve(method, mb, config, len(exact))
                        f1, fn = _fk_pair(sol.energies, exact, n)
                        ok = sol.diagnostics.get("all_converged", True)
                        status = "ok" if ok else "not-converged"
                    except (ValueError, RuntimeError) as exc:
                        f1 = fn = math.inf
                        status = f"failed: {exc}".replace(",", ";")
                    runs.append((chi, shots, seed, method, f1, fn, status))
    summary = []
    for chi in config.chis:
        for shots in budgets:
            for method in config.methods():
                sel = [r for r in runs if r[0] == chi and r[1] == shots and r[3] == method]
                n_bad = sum(r[6] != "ok" for r in sel)
                for k, col in ((1, 4), (n + 1, 5)):
                    vals = np.array([r[col] for r in sel], dtype=float)
                    with np.errstate(invalid="ignore"):
                        q25, med, q75 = np.nan_to_num(np.quantile(vals, [0.25, 0.5, 0.75]), nan=math.inf)
                    summary.append((chi, shots, method, k, med, q25, q75, len(sel), n_bad))
    files = {"summary": out / "shot_study.csv", "runs": out / "shot_study_runs.csv"}
    _write_atomic(files["summary"], _csv_text(head, ("chi", "shots", "method", "k", "median", "q25", "q75", "n_runs", "n_problems"), summary))
    _write_atomic(files["runs"], _csv_text(head, ("chi", "shots", "seed", "method", "f1", "fn1", "status"), runs))
    return files


COMMANDS = {
    "kernels": cmd_kernels,
    "spectrum": cmd_spectrum,
    "noise-study": cmd_noise_study,
    "shot-study": cmd_shot_study,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="key = value text, JSON, or an output CSV with an echo block")
    common.add_argument("--out", help="output directory")
    common.add_argument("--n", type=int, help="particle number N")
    common.add_argument("--epsilon", help="level spacing")
    common.add_argument("--chi", help="single coupling value")
    common.add_argument("--chi-sweep", dest="chi_sweep", help="comma-separated couplings")
    common.add_argument("--grid-l", "--L", dest="grid_l", help="number of generator angles (default N+1)")
    common.add_argument("--mode", choices=CHOICES["mode"])
    common.add_argument("--shots", help="shots per circuit, or 'exact'")
    common.add_argument("--seed", help="base seed")
    common.add_argument("--noise", choices=CHOICES["noise"])
    for name in ("t1", "t2", "readout-error", "cnot-error", "one-qubit-error"):
        common.add_argument(f"--{name}", dest=name.replace("-", "_"))
    common.add_argument("--mitigate", choices=CHOICES["mitigate"])
    common.add_argument("--zne-folds", dest="zne_folds")
    common.add_argument("--scale-before-zne", dest="scale_before_zne", action="store_const", const="true")
    common.add_argument("--assume-real", dest="assume_real", action="store_const", const="true")
    common.add_argument("--solver", choices=CHOICES["solver"])
    common.add_argument("--norm-threshold", dest="norm_threshold")
    common.add_argument("--vqd-bound", dest="vqd_bound")
    common.add_argument("--vqd-restarts", dest="vqd_restarts")
    common.add_argument("--vqd-seed", dest="vqd_seed")
    common.add_argument("--theta-ref", dest="theta_ref", help="reference angle for a kernel scan, e.g. pi/3")
    common.add_argument("--shots-list", dest="shots_list")
    common.add_argument("--seeds", help="number of seeds per shot budget")
    common.add_argument("-v", "--verbose", action="store_true", default=False)

    parser = argparse.ArgumentParser(prog="lipkin-gcm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({_accel.backend_name()})")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def resolve_config(ns: argparse.Namespace) -> ExperimentConfig:
    values = {}
    if getattr(ns, "config", None):
        values.update(read_config_file(ns.config))
    flags = {k: v for k, v in vars(ns).items() if k not in ("config", "command", "verbose")}
    values.update(_coerce(flags))
    return validate(ExperimentConfig(**values))


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = resolve_config(ns)
        files = COMMANDS[ns.command](config)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"lipkin-gcm: error: {exc}", file=sys.stderr)
        return 2
    for label, path in files.items():
        print(f"{label}: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
