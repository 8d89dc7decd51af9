"""Time the numba and numpy kernel paths side by side.

Usage: python benchmarks/bench_kernels.py [--repeat N]

The numba timings exclude the first (compiling) call. Each row also reports
the largest absolute difference between the two paths.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from cphase import core, kernels
from cphase.qpt import PROCESS_BASIS, input_states
from cphase.tomography import exact_rates


def _cases(rng):
    basis = np.ascontiguousarray(PROCESS_BASIS)
    inputs = np.ascontiguousarray(input_states())
    rates = np.array([exact_rates(core.random_density_matrix(rng), 4000.0) for _ in range(1000)])
    rates = rng.poisson(rates).astype(float) + 1.0
    rhos = np.array([core.random_density_matrix(rng) for _ in range(1000)])
    return [
        ("design_matrix 256x256", kernels.design_matrix_numpy, kernels.design_matrix_numba, (basis, inputs)),
        ("pauli_expectations x1000", kernels.pauli_expectations_numpy, kernels.pauli_expectations_numba, (rates,)),
        ("log_negativity x1000", kernels.log_negativity_numpy, kernels.log_negativity_numba, (rhos,)),
    ]


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20)
    args = parser.parse_args(argv)
    if not kernels.HAVE_NUMBA:
        print("numba is not installed; only the numpy path is available")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<26}{'numpy ms':>10}{'numba ms':>10}{'speedup':>9}{'max diff':>11}")
    for name, f_np, f_nb, inputs in _cases(rng):
        diff = float(np.abs(f_np(*inputs) - f_nb(*inputs)).max())  # also warms the JIT
        t_np = min(timeit.repeat(lambda: f_np(*inputs), number=1, repeat=args.repeat)) * 1e3
        t_nb = min(timeit.repeat(lambda: f_nb(*inputs), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<26}{t_np:>10.3f}{t_nb:>10.3f}{t_np / t_nb:>8.1f}x{diff:>11.1e}")


if __name__ == "__main__":
    main()
