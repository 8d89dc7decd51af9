"""Non-trace-preserving linear process tomography of the gate.

The process is written E(ρ) = Σ_ij χ_ij e_i ρ e_j† with e_i = P_i / 2 the
orthonormal two-qubit Pauli operators (Tr(e_i† e_j) = δ_ij). In this basis
the ideal gate has coefficient vector (1, 1, 1, -1)/3 on (II, IZ, ZI, ZZ), so
χ_th has 1/9 peaks and Tr χ_th = 4/9.

χ is obtained from a single global solve of the defining equation over all
inputs, using the success probabilities p_k normalized so that p_HH = 1/9.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from . import kernels
from .core import PHYSICAL_EPS, density, pauli_basis, product_state
from .counts import DetectorEfficiencies, derive_seed
from .exceptions import DegeneratePostSelectionError, InvalidInputError, InversionError
from .gate import GateConfig, apply_gate
from .tomography import measure_state, reconstruct_state

# HL rather than H-: since |H+><H+| + |H-><H-| = |HH><HH| + |HV><HV|, a set holding
# H+, H-, HH and HV spans only 15 input directions (kept below as a negative example).
QPT_INPUT_LABELS = ("HH", "HV", "H+", "HL", "VH", "VV", "V+", "VL",
                    "+H", "+V", "++", "+L", "LH", "LV", "L+", "LL")
HMINUS_INPUT_LABELS = ("HH", "HV", "H+", "H-", "VH", "VV", "V+", "VL",
                       "+H", "+V", "++", "+L", "LH", "LV", "L+", "LL")

PROCESS_BASIS = pauli_basis() / 2.0
P_HH = 1.0 / 9.0

_IDEAL_INDICES = (0, 3, 12, 15)  # II, IZ, ZI, ZZ


@dataclass(frozen=True)
class ProcessData:
    labels: tuple[str, ...]
    probabilities: np.ndarray  # (K,)
    outputs: np.ndarray  # (K, 4, 4), unit trace

    def raw(self) -> np.ndarray:
        """p_k ρ_out^k, the right-hand side of the defining equation."""
        return self.probabilities[:, None, None] * self.outputs


def input_states(labels: Sequence[str] = QPT_INPUT_LABELS) -> np.ndarray:
    return np.array([density(product_state(lab)) for lab in labels])


@lru_cache(maxsize=8)
def _factorized_design(labels: tuple[str, ...]):
    a = kernels.design_matrix(PROCESS_BASIS, input_states(labels))
    if a.shape[0] != a.shape[1]:
        raise InversionError(f"need 16 input states, got {len(labels)}")
    s = np.linalg.svd(a, compute_uv=False)
    rank = int(np.sum(s > s[0] * 1e-10))
    if rank < a.shape[1]:
        raise InversionError(f"input set spans only rank {rank} of {a.shape[1]}")
    return scipy.linalg.lu_factor(a)


def extract_probabilities(raw_outputs: np.ndarray, labels: Sequence[str] = QPT_INPUT_LABELS) -> ProcessData:
    """Split unnormalized outputs into p_k and ρ_out^k, rescaled so p_HH = 1/9."""
    raw_outputs = np.asarray(raw_outputs, dtype=complex)
    labels = tuple(labels)
    if "HH" not in labels:
        raise InvalidInputError("input set must contain HH for the probability normalization")
    traces = np.trace(raw_outputs, axis1=1, axis2=2).real
    if np.any(traces <= 0):
        bad = [lab for lab, t in zip(labels, traces) if t <= 0]
        raise DegeneratePostSelectionError(f"zero output trace for inputs {bad}")
    outputs = raw_outputs / traces[:, None, None]
    probs = traces * (P_HH / traces[labels.index("HH")])
    return ProcessData(labels, probs, outputs)


def reconstruct_chi(data: ProcessData) -> np.ndarray:
    lu = _factorized_design(tuple(data.labels))
    chi = scipy.linalg.lu_solve(lu, data.raw().reshape(-1)).reshape(16, 16)
    return (chi + chi.conj().T) / 2


def apply_chi(chi: np.ndarray, rho: np.ndarray) -> np.ndarray:
    e = PROCESS_BASIS
    return np.einsum("ij,iab,bc,jdc->ad", chi, e, rho, e.conj(), optimize=True)


def chi_residual(chi: np.ndarray, data: ProcessData) -> float:
    """Largest elementwise violation of the defining equation over all inputs."""
    raw = data.raw()
    worst = 0.0
    for rho_in, target in zip(input_states(data.labels), raw):
        worst = max(worst, float(np.abs(apply_chi(chi, rho_in) - target).max()))
    return worst


def chi_from_kraus(kraus: Sequence[np.ndarray]) -> np.ndarray:
    """χ of an operator-sum channel by direct expansion of each Kraus operator."""
    e = PROCESS_BASIS
    chi = np.zeros((16, 16), dtype=complex)
    for k in kraus:
        c = np.einsum("iba,ba->i", e.conj(), k)  # Tr(e_i† K)
        chi += np.outer(c, c.conj())
    return chi


def ideal_chi() -> np.ndarray:
    v = np.zeros(16)
    v[list(_IDEAL_INDICES)] = np.array([1.0, 1.0, 1.0, -1.0]) / 3.0
    return np.outer(v, v).astype(complex)


def process_fidelity(chi_a: np.ndarray, chi_b: np.ndarray) -> float:
    ta = np.trace(chi_a)
    tb = np.trace(chi_b)
    if abs(ta) == 0 or abs(tb) == 0:
        raise InvalidInputError("process matrix with zero trace")
    value = np.trace(chi_a @ chi_b) / (ta * tb)
    if abs(value.imag) > 1e-10:
        raise InvalidInputError(f"process fidelity has imaginary part {value.imag:.3g}")
    return float(value.real)


def chi_min_eigenvalue(chi: np.ndarray) -> float:
    return float(np.linalg.eigvalsh((chi + chi.conj().T) / 2)[0])


def chi_is_physical(chi: np.ndarray, eps: float = PHYSICAL_EPS) -> bool:
    return chi_min_eigenvalue(chi) >= -eps


def process_data_from_channel(channel: Callable[[np.ndarray], np.ndarray],
                              labels: Sequence[str] = QPT_INPUT_LABELS) -> ProcessData:
    """Noiseless ProcessData for any map returning unnormalized outputs."""
    raw = np.array([channel(rho) for rho in input_states(labels)])
    return extract_probabilities(raw, labels)


def simulate_process_data(cfg: GateConfig, pairs: int = 4000, seed: int = 0, noiseless: bool = False,
                          eff: DetectorEfficiencies | None = None,
                          labels: Sequence[str] = QPT_INPUT_LABELS) -> ProcessData:
    """Run every QPT input through the gate and, unless noiseless, through state tomography.

    In the noisy case p_k is estimated from the mean corrected coincidence
    rate per setting divided by the number of incident pairs.
    """
    raws = []
    for k, rho_in in enumerate(input_states(labels)):
        out, p = apply_gate(rho_in, cfg)
        if noiseless:
            raws.append(out)
            continue
        rates, errors, _ = measure_state(out, pairs, derive_seed(seed, k), eff)
        rec = reconstruct_state(rates, errors)
        p_hat = rates.sum(axis=1).mean() / pairs
        raws.append(p_hat * rec.rho)
    return extract_probabilities(np.array(raws), labels)
