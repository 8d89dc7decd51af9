"""Linear two-qubit state tomography and analysis of entangling runs.

All nine basis pairs {Z, X, Y} x {Z, X, Y} are measured and both PBS ports
of each arm are used, so every setting gives four coincidence rates. Rates
are stored as (9, 4) arrays ordered like ``TOMO_SETTINGS`` and ``CHANNELS``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import (
    PHYSICAL_EPS,
    chsh_fidelity_check,
    fidelity_pure,
    log_negativity,
    pauli_basis,
)
from .counts import (
    AnalyzerSetting,
    CountRecord,
    DetectorEfficiencies,
    correct_efficiencies,
    derive_seed,
    expected_counts,
    simulate_counts,
)
from .exceptions import InversionError
from .gate import ideal_cphase

TOMO_SETTINGS = tuple((a, b) for a in kernels.SETTING_BASES for b in kernels.SETTING_BASES)

_PAULIS = pauli_basis()


@dataclass(frozen=True)
class StateReconstruction:
    rho: np.ndarray
    covariance: np.ndarray  # 15x15, Bloch parameters in Pauli order without II
    min_eigenvalue: float
    physical: bool
    rates: np.ndarray | None = None
    errors: np.ndarray | None = None


def tomography_settings() -> list[AnalyzerSetting]:
    return [AnalyzerSetting.from_bases(a, b) for a, b in TOMO_SETTINGS]


def rho_from_expectations(expect: np.ndarray) -> np.ndarray:
    """ρ = (1/4) Σ ⟨P_i⟩ P_i; works on a single (16,) vector or a batch (B, 16)."""
    return np.tensordot(np.asarray(expect), _PAULIS, axes=(-1, 0)) / 4.0


def _expectation_jacobian(rates: np.ndarray) -> np.ndarray:
    """d⟨P_i⟩ / d rate, shape (16, 9, 4)."""
    jac = np.zeros((16,) + rates.shape)
    sa, sb = kernels.PORT_SIGNS[:, 0], kernels.PORT_SIGNS[:, 1]
    for s, (ia, ib) in enumerate(kernels.SETTING_PAULIS):
        total = rates[s].sum()
        p = rates[s] / total
        for coeff, row, weight in ((sa * sb, 4 * ia + ib, 1.0), (sa, 4 * ia, 1 / 3), (sb, ib, 1 / 3)):
            jac[row, s] += weight * (coeff - coeff @ p) / total
    return jac


def reconstruct_state(rates: np.ndarray, errors: np.ndarray | None = None) -> StateReconstruction:
    """Linear inversion of 36 efficiency-corrected rates."""
    rates = np.asarray(rates, dtype=float)
    if rates.shape != (9, 4):
        raise InversionError(f"expected rates of shape (9, 4), got {rates.shape}")
    if np.any(rates.sum(axis=1) <= 0):
        raise InversionError("a tomography setting has zero total counts")
    expect = kernels.pauli_expectations(rates[None])[0]
    rho = rho_from_expectations(expect)
    rho = (rho + rho.conj().T) / 2

    if errors is None:
        cov = np.zeros((15, 15))
    else:
        errors = np.asarray(errors, dtype=float)
        jac = _expectation_jacobian(rates).reshape(16, -1)[1:]
        cov = (jac * errors.reshape(-1) ** 2) @ jac.T

    lam_min = float(np.linalg.eigvalsh(rho)[0])
    return StateReconstruction(rho, cov, lam_min, lam_min >= -PHYSICAL_EPS, rates, errors)


def clip_to_physical(rho: np.ndarray) -> np.ndarray:
    """Zero negative eigenvalues and renormalize. Never used for headline numbers."""
    w, u = np.linalg.eigh(rho)
    w = np.clip(w, 0.0, None)
    out = (u * w) @ u.conj().T
    return out / np.trace(out).real


def exact_rates(rho: np.ndarray, pairs: float = 1.0) -> np.ndarray:
    """Noiseless efficiency-corrected rates N Tr(ρ P) for every setting."""
    eff = DetectorEfficiencies()
    return np.array([expected_counts(rho, s, eff, pairs) for s in tomography_settings()])


def measure_state(rho: np.ndarray, pairs: int, seed: int,
                  eff: DetectorEfficiencies | None = None) -> tuple[np.ndarray, np.ndarray, list[CountRecord]]:
    """Simulate all nine settings and return corrected rates, errors and raw records.

    ``rho`` is the unnormalized post-selected state, so its trace sets the
    coincidence yield per incident pair.
    """
    eff = eff or DetectorEfficiencies()
    records = [
        simulate_counts(rho, setting, eff, pairs, derive_seed(seed, s))
        for s, setting in enumerate(tomography_settings())
    ]
    corrected = [correct_efficiencies(rec) for rec in records]
    rates = np.array([c[0] for c in corrected])
    errors = np.array([c[1] for c in corrected])
    return rates, errors, records


@dataclass(frozen=True)
class EntanglementReport:
    fidelity: float
    log_negativity: float
    chsh_violated: bool
    min_eigenvalue: float
    physical: bool
    fidelity_err: float | None = None
    log_negativity_err: float | None = None
    n_resamples: int = 0


def resample_functionals(rates: np.ndarray, errors: np.ndarray, target: np.ndarray,
                         n_resamples: int = 1000, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo fidelities and log-negativities from Gaussian-resampled rates."""
    rng = np.random.Generator(np.random.PCG64(seed))
    draws = rng.normal(rates, errors, size=(n_resamples,) + rates.shape)
    draws = np.clip(draws, 0.0, None)
    rhos = rho_from_expectations(kernels.pauli_expectations(draws))
    fids = np.einsum("a,rab,b->r", target.conj(), rhos, target).real
    negs = kernels.log_negativity_batch(rhos)
    return fids, negs


def analyze_entangling_run(psi_in: np.ndarray, rec: StateReconstruction,
                           n_resamples: int = 0, seed: int = 0) -> EntanglementReport:
    target = ideal_cphase(psi_in)
    target = target / np.linalg.norm(target)
    f = fidelity_pure(rec.rho, target)
    n = log_negativity(rec.rho)
    f_err = n_err = None
    if n_resamples and rec.errors is not None:
        fids, negs = resample_functionals(rec.rates, rec.errors, target, n_resamples, seed)
        f_err, n_err = float(fids.std(ddof=1)), float(negs.std(ddof=1))
    return EntanglementReport(
        fidelity=f,
        log_negativity=n,
        chsh_violated=chsh_fidelity_check(f),
        min_eigenvalue=rec.min_eigenvalue,
        physical=rec.physical,
        fidelity_err=f_err,
        log_negativity_err=n_err,
        n_resamples=n_resamples if f_err is not None else 0,
    )
