"""Two-qubit polarization states, the Pauli operator basis and entanglement measures.

States are plain numpy arrays in the fixed basis order (HH, HV, VH, VV):
kets have shape (4,), density matrices shape (4, 4). Post-selected gate
outputs are allowed to be sub-normalized; their trace is the success
probability.
"""

from __future__ import annotations

import itertools

import numpy as np

from .exceptions import InvalidInputError

BASIS_ORDER = ("HH", "HV", "VH", "VV")

PHYSICAL_EPS = 0.02

_SQRT2 = np.sqrt(2.0)

H = np.array([1.0, 0.0], dtype=complex)
V = np.array([0.0, 1.0], dtype=complex)
PLUS = np.array([1.0, 1.0], dtype=complex) / _SQRT2
MINUS = np.array([1.0, -1.0], dtype=complex) / _SQRT2
L = np.array([1.0, 1.0j], dtype=complex) / _SQRT2
R = np.array([1.0, -1.0j], dtype=complex) / _SQRT2

KETS = {"H": H, "V": V, "+": PLUS, "-": MINUS, "L": L, "R": R}

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

PAULIS_1Q = (IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z)
PAULI_LABELS = tuple(a + b for a, b in itertools.product("IXYZ", repeat=2))

CHSH_FIDELITY_THRESHOLD = float((2.0 + 3.0 * _SQRT2) / 8.0)


def ket(label: str) -> np.ndarray:
    """Single-qubit ket for one of H, V, +, -, L, R."""
    try:
        return KETS[label].copy()
    except KeyError:
        raise InvalidInputError(f"unknown single-qubit label {label!r}") from None


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product ket a ⊗ b with amplitudes c_xy = a_x b_y."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != (2,) or b.shape != (2,):
        raise InvalidInputError("tensor expects two single-qubit kets of shape (2,)")
    return np.kron(a, b)


def product_state(label: str) -> np.ndarray:
    """Two-qubit product ket from a two-character label such as ``"L+"``."""
    if len(label) != 2:
        raise InvalidInputError(f"product-state label must have two characters, got {label!r}")
    return tensor(ket(label[0]), ket(label[1]))


def density(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def pauli_basis() -> np.ndarray:
    """The 16 two-qubit Paulis P_j ⊗ P_k (index 4j + k), shape (16, 4, 4).

    These are the unitary, Hermitian operators with Tr(E_i E_j) = 4 δ_ij.
    """
    return np.array([np.kron(a, b) for a in PAULIS_1Q for b in PAULIS_1Q])


def is_hermitian(rho: np.ndarray, atol: float = 1e-10) -> bool:
    rho = np.asarray(rho)
    return bool(np.allclose(rho, rho.conj().T, atol=atol, rtol=0.0))


def _check_density(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise InvalidInputError(f"expected a 4x4 density matrix, got shape {rho.shape}")
    if not is_hermitian(rho):
        raise InvalidInputError("density matrix is not Hermitian")
    return rho


def _check_normalized(rho: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    rho = _check_density(rho)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise InvalidInputError(f"density matrix trace is {tr:.8g}, expected 1")
    return rho


def min_eigenvalue(rho: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(_check_density(rho))[0])


def is_physical(rho: np.ndarray, eps: float = PHYSICAL_EPS) -> bool:
    """True when no eigenvalue lies below ``-eps``. Informational only."""
    return min_eigenvalue(rho) >= -eps


def fidelity_pure(rho: np.ndarray, psi: np.ndarray) -> float:
    """⟨ψ|ρ|ψ⟩ for a normalized density matrix and a unit ket."""
    rho = _check_normalized(rho)
    psi = np.asarray(psi, dtype=complex)
    value = psi.conj() @ rho @ psi
    if abs(value.imag) > 1e-10:
        raise InvalidInputError(f"fidelity has imaginary part {value.imag:.3g}")
    return float(value.real)


def _clip_spectrum(w: np.ndarray) -> np.ndarray:
    # roundoff-level eigenvalues would otherwise contribute ~sqrt(1e-16) each
    floor = 1e-13 * max(float(np.max(np.abs(w))), 1e-300)
    return np.where(w > floor, w, 0.0)


def _psd_sqrt(rho: np.ndarray) -> np.ndarray:
    w, u = np.linalg.eigh(rho)
    return (u * np.sqrt(_clip_spectrum(w))) @ u.conj().T


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(ρ) σ sqrt(ρ)))^2.

    Negative eigenvalues of either argument (linear-tomography artefacts)
    are clipped before taking square roots; the result is clipped to [0, 1].
    """
    rho = _check_density(rho)
    sigma = _check_density(sigma)
    s = _psd_sqrt(rho)
    w = np.linalg.eigvalsh(s @ sigma @ s)
    value = float(np.sum(np.sqrt(_clip_spectrum(w))) ** 2)
    return min(max(value, 0.0), 1.0)


def partial_transpose(rho: np.ndarray) -> np.ndarray:
    """Partial transpose over the second qubit."""
    r = np.asarray(rho).reshape(2, 2, 2, 2)
    return r.transpose(0, 3, 2, 1).reshape(4, 4)


def log_negativity(rho: np.ndarray) -> float:
    """log2 of the trace norm of the partial transpose, clamped at 0.

    For two qubits the value does not depend on which side is transposed.
    """
    rho = _check_density(rho)
    eig = np.linalg.eigvalsh(partial_transpose(rho))
    return max(float(np.log2(np.sum(np.abs(eig)))), 0.0)


def chsh_fidelity_check(f: float) -> bool:
    """Whether a fidelity to a maximally entangled state guarantees CHSH violation."""
    return bool(f > CHSH_FIDELITY_THRESHOLD)


def random_pure_state(rng: np.random.Generator, dim: int = 4) -> np.ndarray:
    z = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return z / np.linalg.norm(z)


def random_density_matrix(rng: np.random.Generator, rank: int = 4) -> np.ndarray:
    g = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_unitary(rng: np.random.Generator, dim: int = 4) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / _SQRT2
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
