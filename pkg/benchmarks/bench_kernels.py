"""Compare the compiled kernels with the numpy fallback, and the two simulate routes.

Run from the repository root after an editable install:

    python benchmarks/bench_kernels.py [--repeat 5]

Each line reports the best wall time over ``--repeat`` runs and the largest
absolute difference between the two implementations.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from decoq import _kernels_py
from decoq.evolution import simulate
from decoq.models import BathMode, SpinBosonSpec, build_spin_boson_eff
from decoq.states import QubitStateSpec

try:
    from decoq import _ckernels
except ImportError:
    _ckernels = None


def best_time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def max_diff(a, b):
    if isinstance(a, tuple):
        return max(max_diff(x, y) for x, y in zip(a, b))
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def random_density(rng, n, rank):
    x = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = x @ x.conj().T
    return rho / np.trace(rho)


def kernel_cases(rng):
    da, db, rank, nt = 4, 64, 16, 200
    d = da * db
    rho = random_density(rng, d, d)
    h = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    energies, basis = np.linalg.eigh(h + h.conj().T)
    coeffs = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    coeffs /= np.linalg.norm(coeffs)
    times = np.linspace(0.0, 5.0, nt)
    return {
        f"ptrace_bipartite ({da}x{db})": lambda k: k.ptrace_bipartite(rho, da, db, True),
        f"trace_product (D={d})": lambda k: k.trace_product(rho, rho),
        f"series_observables (D={d}, rank {rank}, {nt} steps)": lambda k: k.series_observables(
            basis, energies, coeffs, times, da, db
        ),
    }


def bench_kernels(repeat):
    rng = np.random.default_rng(7)
    print("kernel backends")
    if _ckernels is None:
        print("  compiled extension not built; only the numpy fallback is available")
    for name, call in kernel_cases(rng).items():
        t_py, out_py = best_time(lambda: call(_kernels_py), repeat)
        line = f"  {name:<52} numpy {t_py * 1e3:9.2f} ms"
        if _ckernels is not None:
            t_c, out_c = best_time(lambda: call(_ckernels), repeat)
            line += f"  cython {t_c * 1e3:9.2f} ms  speedup {t_py / t_c:5.2f}x  max diff {max_diff(out_py, out_c):.1e}"
        print(line)


def bench_routes(repeat):
    spec = SpinBosonSpec(
        delta=1.0,
        delta_G=2.0,
        omega_rabi=0.05,
        modes=(BathMode(0.02, 0.6, nbar=0.3, truncation=10), BathMode(0.015, 0.9, nbar=0.2, truncation=8)),
        qubit=QubitStateSpec(theta=1.0, phi=0.0),
    )
    model = build_spin_boson_eff(spec)
    times = np.linspace(0.0, 10.0, 400)
    print(f"simulate routes (spin-boson, D={model.H.dim}, bath rank {model.ic.rho_R.dim})")
    results = {}
    for method in ("vectors", "moments"):
        t, traj = best_time(lambda: simulate(model, times, method=method), repeat)
        results[method] = traj
        print(f"  {method:<8} {t:8.3f} s")
    gap = max_diff(results["vectors"].purity_a, results["moments"].purity_a)
    print(f"  max |purity_a difference| {gap:.1e}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--skip-routes", action="store_true", help="only time the kernels")
    args = ap.parse_args(argv)
    bench_kernels(args.repeat)
    if not args.skip_routes:
        bench_routes(max(1, args.repeat // 2))


if __name__ == "__main__":
    main()
