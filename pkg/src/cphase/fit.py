"""Least-squares fit of the partial-interference model to a measured χ matrix.

The model family keeps the splitter and attenuator amplitudes of a skeleton
config fixed and frees the interference quality Q' (plus, for the
depolarization variant, a white-noise weight d applied after the gate).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize

from .core import fidelity
from .exceptions import ConvergenceError, InvalidInputError
from .gate import GateConfig, build_operators, channel, check_alignment, ideal_config, symmetric_config
from .qpt import (
    QPT_INPUT_LABELS,
    ProcessData,
    apply_chi,
    extract_probabilities,
    input_states,
    process_data_from_channel,
    reconstruct_chi,
)

VARIANTS = ("quality", "depolarization")
DEFAULT_TOL = 1e-6
DEFAULT_MAXITER = 500


@dataclass(frozen=True)
class ModelSpec:
    variant: str = "quality"
    skeleton: GateConfig = field(default_factory=ideal_config)
    free_ratio: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvalidInputError(f"unknown model variant {self.variant!r}; choose from {VARIANTS}")

    def param_names(self) -> tuple[str, ...]:
        names = ("quality",)
        if self.variant == "depolarization":
            names += ("depolarization",)
        if self.free_ratio:
            names += ("ratio",)
        return names

    def bounds(self) -> list[tuple[float, float]]:
        b = {"quality": (0.0, 1.0), "depolarization": (0.0, 1.0), "ratio": (0.5, 8.0)}
        return [b[n] for n in self.param_names()]


def _config_for(spec: ModelSpec, params: dict) -> GateConfig:
    cfg = spec.skeleton
    if "ratio" in params:
        cfg = symmetric_config(params["ratio"], coherence_length=cfg.coherence_length)
    return cfg.with_quality(float(np.clip(params["quality"], 0.0, 1.0)))


def model_channel(spec: ModelSpec, params: dict):
    cfg = _config_for(spec, params)
    ops = build_operators(cfg)
    d = float(params.get("depolarization", 0.0))

    def run(rho):
        out = channel(rho, ops, cfg.quality)
        if d:
            out = (1.0 - d) * out + d * np.trace(out).real * np.eye(4) / 4.0
        return out

    return run


def model_process_data(spec: ModelSpec, params: dict) -> ProcessData:
    return process_data_from_channel(model_channel(spec, params))


def chi_from_model(spec: ModelSpec, params: dict) -> np.ndarray:
    return reconstruct_chi(model_process_data(spec, params))


def chi_objective(chi_model: np.ndarray, chi_exp: np.ndarray) -> float:
    return float(np.sum(np.abs(chi_model - chi_exp) ** 2))


def measured_outputs_from_chi(chi: np.ndarray) -> ProcessData:
    """Per-input outputs implied by χ (exactly the data χ was inverted from)."""
    raw = np.array([apply_chi(chi, rho) for rho in input_states()])
    return extract_probabilities(raw, QPT_INPUT_LABELS)


@dataclass
class FitResult:
    variant: str
    params: dict
    residual: float
    converged: bool
    iterations: int
    evaluations: int
    tol: float
    maxiter: int
    fidelities: list[float] = field(default_factory=list)
    fidelity_mean: float = float("nan")
    fidelity_std: float = float("nan")

    @property
    def quality(self) -> float:
        return self.params["quality"]

    def to_dict(self) -> dict:
        return asdict(self)


def model_output_fidelities(spec: ModelSpec, params: dict, measured: ProcessData) -> tuple[np.ndarray, float, float]:
    """Uhlmann fidelity between model and measured outputs for every input."""
    model = model_process_data(spec, params)
    if tuple(model.labels) != tuple(measured.labels):
        raise InvalidInputError("measured data uses a different input set")
    fids = np.array([fidelity(m, x) for m, x in zip(model.outputs, measured.outputs)])
    return fids, float(fids.mean()), float(fids.std(ddof=1)) if len(fids) > 1 else 0.0


def fit_quality(chi_exp: np.ndarray, spec: ModelSpec | None = None, measured: ProcessData | None = None,
                tol: float = DEFAULT_TOL, maxiter: int = DEFAULT_MAXITER) -> FitResult:
    """Minimize Σ|χ_mod - χ_exp|² over the free model parameters.

    Raises ConvergenceError (with ``best`` set) when the iteration cap is hit.
    """
    spec = spec or ModelSpec()
    chi_exp = np.asarray(chi_exp, dtype=complex)
    if not np.allclose(chi_exp, chi_exp.conj().T, atol=1e-10, rtol=0):
        raise InvalidInputError("measured χ is not Hermitian")
    names = spec.param_names()

    def objective(x):
        return chi_objective(chi_from_model(spec, dict(zip(names, np.atleast_1d(x)))), chi_exp)

    # quality-only pass; for multi-parameter variants the others sit at their null values
    rest = [_null_value(n, spec) for n in names[1:]]
    first = optimize.minimize_scalar(
        lambda q: objective([q, *rest]),
        bounds=(0.0, 1.0), method="bounded", options={"xatol": tol, "maxiter": maxiter},
    )
    # bounded Brent never evaluates the endpoints themselves
    for edge in (0.0, 1.0):
        f_edge = objective([edge, *rest])
        if f_edge <= first.fun:
            first.x, first.fun = edge, f_edge
    if len(names) == 1:
        x_best = np.array([first.x])
        converged = bool(first.success)
        nit, nfev = int(first.nit), int(first.nfev)
    else:
        x0 = np.array([first.x] + [_start(n, spec) for n in names[1:]])
        res = optimize.minimize(
            objective, x0, method="Nelder-Mead", bounds=spec.bounds(),
            options={"xatol": tol, "fatol": 1e-15, "maxiter": maxiter, "initial_simplex": _simplex(x0, spec)},
        )
        x_best = np.atleast_1d(res.x)
        converged = bool(res.success)
        nit, nfev = int(res.nit) + int(first.nit), int(res.nfev) + int(first.nfev)

    params = {n: float(v) for n, v in zip(names, x_best)}
    result = FitResult(
        variant=spec.variant, params=params, residual=objective(x_best), converged=converged,
        iterations=nit, evaluations=nfev, tol=tol, maxiter=maxiter,
    )
    measured = measured if measured is not None else measured_outputs_from_chi(chi_exp)
    fids, mean, std = model_output_fidelities(spec, params, measured)
    result.fidelities = [float(f) for f in fids]
    result.fidelity_mean, result.fidelity_std = mean, std
    if not converged:
        raise ConvergenceError(f"fit did not converge within {maxiter} iterations", best=result)
    return result


def _null_value(name: str, spec: ModelSpec) -> float:
    if name == "ratio":
        return float(check_alignment(spec.skeleton).ratio)
    return 0.0


def _start(name: str, spec: ModelSpec) -> float:
    return 0.02 if name == "depolarization" else _null_value(name, spec)


def _simplex(x0: np.ndarray, spec: ModelSpec) -> np.ndarray:
    steps = {"quality": 0.05, "depolarization": 0.05, "ratio": 0.1}
    pts = [x0]
    for i, name in enumerate(spec.param_names()):
        lo, hi = spec.bounds()[i]
        p = x0.copy()
        p[i] = p[i] + steps[name] if p[i] + steps[name] <= hi else p[i] - steps[name]
        pts.append(np.clip(p, lo, hi))
    return np.array(pts)
