"""JSON and CSV serialization of states, process matrices and reports.

Complex numbers are written as ``[re, im]`` pairs and matrices as row-major
nested lists. JSON is written with sorted keys so payloads are byte-stable.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .core import BASIS_ORDER, PAULI_LABELS
from .exceptions import InvalidInputError

CHI_BASIS_NOTE = "e_i = P_i/2 (orthonormal two-qubit Paulis)"


def complex_to_json(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def array_to_json(a: np.ndarray) -> list:
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        return complex_to_json(a)
    return [array_to_json(x) for x in a]


def array_from_json(data: list) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.shape[-1] != 2:
        raise InvalidInputError("complex entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def state_to_json(state: np.ndarray, **extra: Any) -> dict:
    state = np.asarray(state, dtype=complex)
    key = "amplitudes" if state.ndim == 1 else "matrix"
    return {"basis_order": list(BASIS_ORDER), key: array_to_json(state), **extra}


def state_from_json(data: dict) -> np.ndarray:
    if list(data.get("basis_order", [])) != list(BASIS_ORDER):
        raise InvalidInputError(f"basis_order must be {list(BASIS_ORDER)}")
    if "matrix" in data:
        return array_from_json(data["matrix"])
    return array_from_json(data["amplitudes"])


def chi_to_json(chi: np.ndarray, **extra: Any) -> dict:
    return {
        "basis_order": list(BASIS_ORDER),
        "chi_basis": list(PAULI_LABELS),
        "chi_basis_normalization": CHI_BASIS_NOTE,
        "chi": array_to_json(chi),
        **extra,
    }


def chi_from_json(data: dict) -> np.ndarray:
    if list(data.get("chi_basis", [])) != list(PAULI_LABELS):
        raise InvalidInputError("unexpected chi_basis labels")
    chi = array_from_json(data["chi"])
    if chi.shape != (16, 16):
        raise InvalidInputError(f"chi must be 16x16, got {chi.shape}")
    return chi


def to_jsonable(obj: Any) -> Any:
    """Recursively convert numpy scalars/arrays into plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return array_to_json(obj)
        return obj.tolist()
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, complex):
        return complex_to_json(obj)
    return obj


def dumps(payload: Any) -> str:
    return json.dumps(to_jsonable(payload), indent=2, sort_keys=True) + "\n"


def write_json(path: str | Path, payload: Any) -> None:
    Path(path).write_text(dumps(payload))


def read_json(path: str | Path) -> Any:
    with open(path) as fh:
        return json.load(fh)


def write_matrix_csv(path: str | Path, matrix: np.ndarray, labels: Sequence[str]) -> None:
    """Long-format CSV (row, col, re, im) for bar plots of real and imaginary parts."""
    matrix = np.asarray(matrix, dtype=complex)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "col", "re", "im"])
        for i, ri in enumerate(labels):
            for j, cj in enumerate(labels):
                z = matrix[i, j]
                w.writerow([ri, cj, repr(float(z.real)), repr(float(z.imag))])


def write_rows_csv(path: str | Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
