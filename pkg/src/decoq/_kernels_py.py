"""Pure-numpy kernels. Reference semantics for the compiled core."""

from __future__ import annotations

import numpy as np


def ptrace_bipartite(rho: np.ndarray, da: int, db: int, keep_first: bool) -> np.ndarray:
    t = rho.reshape(da, db, da, db)
    if keep_first:
        return np.trace(t, axis1=1, axis2=3).copy()
    return np.trace(t, axis1=0, axis2=2).copy()


def trace_product(a: np.ndarray, b: np.ndarray) -> complex:
    return complex(np.einsum("ij,ji->", a, b))


def series_observables(basis, energies, coeffs, times, da, db):
    """Purity data of rho(t) = sum_k |psi_k(t)><psi_k(t)| on a (da, db) split.

    ``psi_k(t) = basis @ (exp(-i energies t) * coeffs[:, k])``.

    Returns ``(purity_a, purity_total, pop_a, pop_b)``: tr rho_a^2, tr rho^2
    and the diagonals of rho_a and rho_b, one row per time.
    """
    basis = np.ascontiguousarray(basis, dtype=complex)
    coeffs = np.ascontiguousarray(coeffs, dtype=complex)
    energies = np.asarray(energies, dtype=float)
    times = np.asarray(times, dtype=float)
    r = coeffs.shape[1]
    nt = times.shape[0]
    purity_a = np.empty(nt)
    purity_total = np.empty(nt)
    pop_a = np.empty((nt, da))
    pop_b = np.empty((nt, db))
    for n, t in enumerate(times):
        psi = basis @ (np.exp(-1j * energies * t)[:, None] * coeffs)
        x = psi.reshape(da, db * r)
        rho_a = x @ x.conj().T
        purity_a[n] = np.vdot(rho_a, rho_a).real
        gram = psi.conj().T @ psi
        purity_total[n] = np.vdot(gram, gram).real
        weights = np.abs(psi.reshape(da, db, r)) ** 2
        pop_a[n] = weights.sum(axis=(1, 2))
        pop_b[n] = weights.sum(axis=(0, 2))
    return purity_a, purity_total, pop_a, pop_b


def phase_quadratic_forms(energies, mats, times, chunk: int = 256) -> np.ndarray:
    """``out[q, n] = f(t_n)^T mats[q] conj(f(t_n))`` with ``f(t) = exp(-i energies t)``.

    Reduced moments of rho(t) = B diag(f) C diag(f)^dagger B^dagger reduce to
    this form once C and the basis overlaps are folded into ``mats``; the
    cost per time is one matrix-vector product per form, whatever the rank
    of the initial state.
    """
    energies = np.asarray(energies, dtype=float)
    times = np.asarray(times, dtype=float)
    out = np.empty((len(mats), times.size), dtype=complex)
    for start in range(0, times.size, chunk):
        stop = min(start + chunk, times.size)
        f = np.exp(-1j * np.outer(times[start:stop], energies))
        fc = f.conj()
        for q, a in enumerate(mats):
            out[q, start:stop] = np.einsum("tn,tn->t", f @ a, fc)
    return out
