"""Hot numeric kernels with a numba path and a pure-numpy path.

The numba path is used when numba imports and ``CPHASE_DISABLE_NUMBA`` is
unset (or "0"). Both paths are always importable under explicit names
(``*_numpy`` / ``*_numba``) so tests and ``benchmarks/`` can compare them.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("CPHASE_DISABLE_NUMBA", "0") in ("", "0")

# Tomography settings ordering: arm-a basis outer, arm-b basis inner.
SETTING_BASES = ("Z", "X", "Y")
_PAULI_INDEX = {"Z": 3, "X": 1, "Y": 2}
# For each of the 9 settings: (Pauli index on arm a, Pauli index on arm b)
SETTING_PAULIS = np.array(
    [[_PAULI_INDEX[a], _PAULI_INDEX[b]] for a in SETTING_BASES for b in SETTING_BASES], dtype=np.int64
)
# Analyzer-port eigenvalues for the four coincidence channels (hh, hv, vh, vv).
PORT_SIGNS = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])


# design matrix for process tomography: A[(k, a, b), (i, j)] = (E_i ρ_k E_j†)[a, b]

def design_matrix_numpy(basis: np.ndarray, inputs: np.ndarray) -> np.ndarray:
    n, d = basis.shape[0], basis.shape[1]
    k = inputs.shape[0]
    full = np.einsum("iab,kbc,jdc->kadij", basis, inputs, basis.conj(), optimize=True)
    return full.reshape(k * d * d, n * n)


def _design_matrix_loops(basis, inputs):
    n = basis.shape[0]
    d = basis.shape[1]
    k = inputs.shape[0]
    out = np.zeros((k * d * d, n * n), dtype=np.complex128)
    left = np.zeros((d, d), dtype=np.complex128)
    for kk in range(k):
        rho = inputs[kk]
        for i in range(n):
            ei = basis[i]
            for a in range(d):
                for c in range(d):
                    acc = 0j
                    for b in range(d):
                        acc += ei[a, b] * rho[b, c]
                    left[a, c] = acc
            for j in range(n):
                ej = basis[j]
                col = i * n + j
                for a in range(d):
                    for bb in range(d):
                        acc = 0j
                        for c in range(d):
                            acc += left[a, c] * np.conj(ej[bb, c])
                        out[(kk * d + a) * d + bb, col] = acc
    return out


# batched linear state inversion: rates (B, 9, 4) -> Pauli expectations (B, 16)

def pauli_expectations_numpy(rates: np.ndarray) -> np.ndarray:
    rates = np.asarray(rates, dtype=float)
    totals = rates.sum(axis=2)
    probs = rates / totals[..., None]
    b = rates.shape[0]
    out = np.zeros((b, 16))
    out[:, 0] = 1.0
    corr = probs @ (PORT_SIGNS[:, 0] * PORT_SIGNS[:, 1])
    marg_a = probs @ PORT_SIGNS[:, 0]
    marg_b = probs @ PORT_SIGNS[:, 1]
    ia, ib = SETTING_PAULIS[:, 0], SETTING_PAULIS[:, 1]
    out[:, 4 * ia + ib] = corr
    for p in (1, 2, 3):
        out[:, 4 * p] = marg_a[:, ia == p].mean(axis=1)
        out[:, p] = marg_b[:, ib == p].mean(axis=1)
    return out


def _pauli_expectations_loops(rates):
    b = rates.shape[0]
    ns = rates.shape[1]
    out = np.zeros((b, 16))
    for r in range(b):
        out[r, 0] = 1.0
        for s in range(ns):
            total = 0.0
            for m in range(4):
                total += rates[r, s, m]
            ia = SETTING_PAULIS[s, 0]
            ib = SETTING_PAULIS[s, 1]
            c = 0.0
            ma = 0.0
            mb = 0.0
            for m in range(4):
                p = rates[r, s, m] / total
                c += PORT_SIGNS[m, 0] * PORT_SIGNS[m, 1] * p
                ma += PORT_SIGNS[m, 0] * p
                mb += PORT_SIGNS[m, 1] * p
            out[r, 4 * ia + ib] = c
            # each basis appears in three settings per arm
            out[r, 4 * ia] += ma / 3.0
            out[r, ib] += mb / 3.0
    return out


# batched log-negativity of (B, 4, 4) Hermitian matrices

def log_negativity_numpy(rhos: np.ndarray) -> np.ndarray:
    rhos = np.asarray(rhos, dtype=complex)
    pt = rhos.reshape(-1, 2, 2, 2, 2).transpose(0, 1, 4, 3, 2).reshape(-1, 4, 4)
    norms = np.abs(np.linalg.eigvalsh(pt)).sum(axis=1)
    return np.maximum(np.log2(norms), 0.0)


def _log_negativity_loops(rhos):
    b = rhos.shape[0]
    out = np.zeros(b)
    pt = np.zeros((4, 4), dtype=np.complex128)
    for r in range(b):
        for a in range(2):
            for bb in range(2):
                for a2 in range(2):
                    for b2 in range(2):
                        pt[2 * a + bb, 2 * a2 + b2] = rhos[r, 2 * a + b2, 2 * a2 + bb]
        w = np.linalg.eigvalsh(pt)
        s = 0.0
        for x in w:
            s += abs(x)
        v = np.log2(s)
        out[r] = v if v > 0.0 else 0.0
    return out


if HAVE_NUMBA:
    design_matrix_numba = numba.njit(cache=True)(_design_matrix_loops)
    pauli_expectations_numba = numba.njit(cache=True)(_pauli_expectations_loops)
    log_negativity_numba = numba.njit(cache=True)(_log_negativity_loops)
else:  # pragma: no cover
    design_matrix_numba = design_matrix_numpy
    pauli_expectations_numba = pauli_expectations_numpy
    log_negativity_numba = log_negativity_numpy


def design_matrix(basis: np.ndarray, inputs: np.ndarray) -> np.ndarray:
    basis = np.ascontiguousarray(basis, dtype=np.complex128)
    inputs = np.ascontiguousarray(inputs, dtype=np.complex128)
    if USE_NUMBA:
        return design_matrix_numba(basis, inputs)
    return design_matrix_numpy(basis, inputs)


def pauli_expectations(rates: np.ndarray) -> np.ndarray:
    rates = np.ascontiguousarray(rates, dtype=np.float64)
    if USE_NUMBA:
        return pauli_expectations_numba(rates)
    return pauli_expectations_numpy(rates)


def log_negativity_batch(rhos: np.ndarray) -> np.ndarray:
    rhos = np.ascontiguousarray(rhos, dtype=np.complex128)
    if USE_NUMBA:
        return log_negativity_numba(rhos)
    return log_negativity_numpy(rhos)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
