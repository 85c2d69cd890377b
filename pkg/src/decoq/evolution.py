"""Exact propagation of the composite state and s(t) series.

The generator is time-independent, so H is diagonalized once. Two routes
then produce the reduced observables:

* vectors: the initial state ``|psi><psi| (x) rho_R`` is carried as the
  weighted vectors ``sqrt(p_k) |psi>|r_k>`` from the spectral decomposition
  of rho_R, one basis change per grid point (cost ~ D^2 k).
* moments: the entries of rho_a and the edge populations are quadratic forms
  in the phases exp(-i E t), cost ~ D^2 per form and grid point, independent
  of the rank k of rho_R. Used for strongly mixed baths.

The hot loops live in :mod:`decoq.kernels`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .entropy import EntropySeries, fd_points_needed
from .errors import UsageError
from .linalg import UnitaryPropagator
from .models import BuiltModel

MIN_STEPS = 16
EDGE_LEVELS = 2
EDGE_TOL = 1e-6
DEFAULT_EPS_S = 0.05
MOMENT_MEMORY = 2**29  # bytes of precomputed forms the moment route may hold
SIMULATE_METHODS = ("auto", "vectors", "moments")


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    purity_a: np.ndarray
    purity_total: np.ndarray | None  # vector route only
    edge_population: np.ndarray  # per time, max over bosonic factors of weight in the top levels
    method: str = "vectors"

    @property
    def entropy(self) -> np.ndarray:
        return np.clip(1.0 - self.purity_a, 0.0, 1.0)


def _weighted_vectors(model: BuiltModel) -> np.ndarray:
    p, vecs = np.linalg.eigh(model.ic.rho_R.data)
    keep = p > 1e-16
    if not np.any(keep):
        raise UsageError("rho_R has no positive weight")
    vecs = vecs[:, keep] * np.sqrt(p[keep])
    return np.kron(model.ic.psi[:, None], vecs)


def _edge_population(model: BuiltModel, pop_a: np.ndarray, pop_b: np.ndarray) -> np.ndarray:
    dims = model.layout.dims
    nt = pop_a.shape[0]
    edge = np.zeros(nt)
    env = pop_b.reshape((nt,) + dims[1:]) if len(dims) > 1 else None
    for f in model.boson_factors:
        if dims[f] <= EDGE_LEVELS:
            continue
        if f == 0:
            marg = pop_a
        else:
            axes = tuple(1 + i for i in range(len(dims) - 1) if i + 1 != f)
            marg = env.sum(axis=axes) if axes else env
        edge = np.maximum(edge, marg[:, -EDGE_LEVELS:].sum(axis=1))
    return edge


def _edge_masks(model: BuiltModel) -> list[np.ndarray]:
    """Boolean masks over the environment index for the top levels of each bath factor."""
    dims = model.layout.dims
    masks = []
    for f in model.boson_factors:
        if f == 0 or dims[f] <= EDGE_LEVELS:
            continue
        levels = np.indices(dims[1:]).reshape(len(dims) - 1, -1)[f - 1]
        masks.append(levels >= dims[f] - EDGE_LEVELS)
    return masks


def _moment_route(model, prop, coeffs, times, da, db) -> Trajectory:
    basis = prop.basis
    D = basis.shape[0]
    c = coeffs @ coeffs.conj().T
    bt = basis.reshape(da, db, D)
    pairs = [(i, j) for i in range(da) for j in range(i, da)]
    mats = [c * (bt[i].T @ bt[j].conj()) for i, j in pairs]
    masks = _edge_masks(model)
    for m in masks:
        sub = bt[:, m, :]
        mats.append(c * np.einsum("irm,irn->mn", sub, sub.conj()))
    vals = kernels.phase_quadratic_forms(prop.energies, mats, times)
    nt = times.size
    purity_a = np.zeros(nt)
    pop_a = np.empty((nt, da))
    for q, (i, j) in enumerate(pairs):
        if i == j:
            pop_a[:, i] = vals[q].real
            purity_a += vals[q].real ** 2
        else:
            purity_a += 2 * np.abs(vals[q]) ** 2
    edge = np.zeros(nt)
    if 0 in model.boson_factors and da > EDGE_LEVELS:
        edge = pop_a[:, -EDGE_LEVELS:].sum(axis=1)
    for q in range(len(pairs), len(mats)):
        edge = np.maximum(edge, vals[q].real)
    return Trajectory(times, purity_a, None, edge, "moments")


def simulate(model: BuiltModel, times, method: str = "auto") -> Trajectory:
    """Purity of system a (and, on the vector route, of the whole state) at each time."""
    if method not in SIMULATE_METHODS:
        raise UsageError(f"method must be one of {SIMULATE_METHODS}, got {method!r}")
    times = np.asarray(times, dtype=float)
    prop = UnitaryPropagator(model.H)
    phi = _weighted_vectors(model)
    coeffs = prop.basis.conj().T @ phi
    da = model.layout.dims[0]
    db = model.layout.total // da
    if method == "auto":
        n_forms = da * (da + 1) // 2 + len(_edge_masks(model))
        fits = n_forms * model.layout.total**2 * 16 <= MOMENT_MEMORY
        method = "moments" if fits and coeffs.shape[1] > 2 * n_forms else "vectors"
    if method == "moments":
        return _moment_route(model, prop, coeffs, times, da, db)
    pa, pt, pop_a, pop_b = kernels.series_observables(prop.basis, prop.energies, coeffs, times, da, db)
    return Trajectory(times, pa, pt, _edge_population(model, pop_a, pop_b))


def run_entropy_series(model: BuiltModel, t_max: float, steps: int, meta: dict | None = None) -> EntropySeries:
    """s(t) = 1 - tr rho_a(t)^2 on ``steps + 1`` uniform points in [0, t_max]."""
    if steps < MIN_STEPS:
        raise UsageError(f"steps must be >= {MIN_STEPS}, got {steps}")
    if not (t_max > 0 and math.isfinite(t_max)):
        raise UsageError(f"t_max must be positive, got {t_max}")
    times = np.linspace(0.0, t_max, steps + 1)
    traj = simulate(model, times)
    edge = float(traj.edge_population.max()) if traj.edge_population.size else 0.0
    info = {
        "truncations": list(model.truncations),
        "leakage": [float(x) for x in model.leakage],
        "edge_population": edge,
        "truncation_flag": edge > EDGE_TOL,
        "grid_step": float(times[1] - times[0]),
        "route": traj.method,
        "warnings": list(model.warnings),
    }
    if meta:
        info.update(meta)
    return EntropySeries(times, traj.entropy, info)


def derivative_series(model: BuiltModel, order: int, step: float, meta: dict | None = None) -> EntropySeries:
    """A short fine-grid series sized for :func:`decoq.entropy.fd_derivative`."""
    steps = max(MIN_STEPS, fd_points_needed(order) - 1)
    return run_entropy_series(model, step * steps, steps, meta)


@dataclass(frozen=True)
class Crossing:
    time: float
    reached: bool
    warnings: tuple[str, ...] = ()

    def label(self) -> str:
        return repr(self.time) if self.reached else "NOT_REACHED"


def estimate_td(series: EntropySeries, eps_s: float = DEFAULT_EPS_S) -> Crossing:
    """First time s(t) reaches ``eps_s``, linearly interpolated between samples."""
    if not (0 < eps_s <= 0.5):
        raise UsageError(f"eps_s must lie in (0, 0.5], got {eps_s}")
    s = series.values
    t = series.times
    above = np.nonzero(s >= eps_s)[0]
    idx = int(above[0]) if above.size else s.size
    warns = []
    if idx > 0:
        pre = s[:idx]
        drop = float(np.max(np.maximum.accumulate(pre) - pre))
        if drop > eps_s / 10:
            warns.append(f"s(t) is non-monotone before the crossing (drop {drop:.3g})")
    if not above.size:
        return Crossing(math.inf, False, tuple(warns))
    if idx == 0:
        return Crossing(0.0, True, tuple(warns))
    t0, t1 = t[idx - 1], t[idx]
    s0, s1 = s[idx - 1], s[idx]
    return Crossing(float(t0 + (eps_s - s0) * (t1 - t0) / (s1 - s0)), True, tuple(warns))


def quadratic_fit_s2(series: EntropySeries, t_window: float) -> float:
    """s''(0) from a least-squares fit s = c2 t^2 + c3 t^3 + c4 t^4 over [0, t_window]."""
    mask = series.times <= t_window + 1e-15
    t = series.times[mask]
    if t.size < 4:
        raise UsageError("fit window holds fewer than 4 samples")
    design = np.stack([t**2, t**3, t**4], axis=1)
    coef, *_ = np.linalg.lstsq(design, series.values[mask], rcond=None)
    return float(2 * coef[0])
