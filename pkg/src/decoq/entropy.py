"""Linear entropy, its second derivative at t=0, t_d extraction and a
finite-difference derivative estimator.

Two independent routes give s''(0) for ``rho(0) = |psi><psi| (x) rho_R``
evolving under ``d rho/dt = -i[V, rho]``:

* :func:`s2_direct` differentiates ``s = 1 - tr rho_a^2`` twice, using
  ``rho_a' = -i tr_R [V, rho]`` and ``rho_a'' = -tr_R [V, [V, rho]]``.
* :func:`s2_eq3` evaluates the bath-correlation form
  ``4 < <V [V,P]>_R - <V>_R <[V,P]>_R >_psi`` with ``P = |psi><psi|``.

The first is ground truth; the second must agree with it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import sparse

from .errors import ConsistencyError, PrecisionError, UsageError
from .linalg import QOperator, commutator, identity, ket_to_dm, kron, partial_trace, trace_of_product

S2_FLOOR = 1e-12
S2_NEGATIVE_NOISE = 1e-10


def linear_entropy(rho: QOperator) -> float:
    """s = 1 - tr rho^2."""
    return float(1.0 - trace_of_product(rho, rho).real)


@dataclass(frozen=True)
class InitialCondition:
    """Pure state of system a, state of R, and the interaction V(0) on a (x) R.

    System a is always the leftmost factor of ``V0``.
    """

    psi: np.ndarray
    rho_R: QOperator
    V0: QOperator

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=complex).ravel()
        object.__setattr__(self, "psi", psi)
        if abs(np.linalg.norm(psi) - 1.0) > 1e-12:
            raise UsageError(f"psi must be normalized, |psi| = {np.linalg.norm(psi):.15g}")
        expected = (psi.size,) + self.rho_R.dims
        if self.V0.dims != expected:
            raise UsageError(f"V0 layout {self.V0.dims} does not compose a {psi.size}-dim system with R {self.rho_R.dims}")
        self.rho_R.check_density("rho_R")
        self.V0.check_hermitian("V0")

    @property
    def projector(self) -> QOperator:
        return ket_to_dm(self.psi)

    @property
    def rho0(self) -> QOperator:
        return kron(self.projector, self.rho_R)

    def lifted_projector(self) -> QOperator:
        return kron(self.projector, identity(self.rho_R.layout))


def _commutes_with_state(ic: InitialCondition) -> bool:
    # [V, P (x) 1] = 0 iff V maps psi (x) R into itself (V is Hermitian)
    da = ic.psi.size
    dr = ic.rho_R.layout.total
    v = ic.V0.data
    w = np.einsum("xab,a->xb", v.reshape(-1, da, dr), ic.psi).reshape(da, dr * dr)
    off = w - np.outer(ic.psi, ic.psi.conj() @ w)
    scale = max(float(np.max(np.abs(v))), 1e-300)
    return float(np.max(np.abs(off))) <= 1e-14 * scale


def _clean_s2(value: complex, ic: InitialCondition) -> float:
    s2 = float(np.real(value))
    # max row sum bounds the spectral norm and costs O(D^2)
    scale = max(1.0, float(np.linalg.norm(ic.V0.data, np.inf)) ** 2)
    if s2 < 0.0:
        if s2 < -S2_NEGATIVE_NOISE * scale:
            raise ConsistencyError(f"s2 = {s2:.3g} is negative beyond rounding noise")
        return 0.0
    return s2


def _state_factor(ic: InitialCondition) -> np.ndarray:
    """Phi with rho0 = Phi Phi^dag, shape (da*dr, rank)."""
    w, u = np.linalg.eigh(ic.rho_R.data)
    keep = w > 0
    r = u[:, keep] * np.sqrt(w[keep])
    return np.kron(ic.psi[:, None], r)


SPARSE_DENSITY = 0.05


def _as_operand(v: np.ndarray):
    """CSR copy of ``v`` when it is sparse enough for that to pay off."""
    if np.count_nonzero(v) <= SPARSE_DENSITY * v.size:
        return sparse.csr_array(v)
    return v


def s2_direct(ic: InitialCondition) -> float:
    """s''(0) = -2 (tr rho_a'^2 + tr rho_a rho_a'') from its definition.

    With rho0 = Phi Phi^dag the commutators only act on the thin factor,
    so the cost is O(D^2 rank) rather than O(D^3).
    """
    if _commutes_with_state(ic):
        return 0.0
    da = ic.psi.size
    phi = _state_factor(ic)
    v = _as_operand(ic.V0.data)
    v1 = v @ phi
    v2 = v @ v1

    def ptr(x, y):
        return x.reshape(da, -1) @ y.reshape(da, -1).conj().T

    rho_a_dot = -1j * (ptr(v1, phi) - ptr(phi, v1))
    rho_a_ddot = -(ptr(v2, phi) - 2.0 * ptr(v1, v1) + ptr(phi, v2))
    proj = np.outer(ic.psi, ic.psi.conj())
    value = -2.0 * (np.trace(rho_a_dot @ rho_a_dot) + np.trace(proj @ rho_a_ddot))
    return _clean_s2(value, ic)


def bath_average(ic: InitialCondition, op: QOperator) -> QOperator:
    """<X>_R = tr_R((I (x) rho_R) X), an operator on system a."""
    weight = kron(identity((ic.psi.size,)), ic.rho_R)
    return partial_trace(weight @ op, 0)


def s2_eq3(ic: InitialCondition) -> float:
    """s''(0) via the bath-correlation expression (see module docstring)."""
    if _commutes_with_state(ic):
        return 0.0
    v = ic.V0
    comm = commutator(v, ic.lifted_projector())
    first = bath_average(ic, v @ comm)
    second = bath_average(ic, v) @ bath_average(ic, comm)
    psi = ic.psi
    value = 4.0 * (psi.conj() @ (first - second).data @ psi)
    return _clean_s2(value, ic)


@dataclass(frozen=True)
class TdResult:
    """s''(0) and the onset scale t_d = 1/sqrt(s2); ``td`` is inf when unbounded."""

    s2: float
    td: float
    commuting: bool
    warnings: tuple[str, ...] = field(default=())

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.td)

    def td_label(self) -> str:
        return "UNBOUNDED" if self.unbounded else repr(self.td)


def td_from_s2(s2: float, floor: float = S2_FLOOR, warnings: tuple[str, ...] = ()) -> TdResult:
    if not math.isfinite(s2):
        raise ConsistencyError(f"s2 must be finite, got {s2}")
    if s2 < -S2_NEGATIVE_NOISE:
        raise ConsistencyError(f"s2 = {s2:.3g} is negative")
    if s2 <= floor:
        return TdResult(max(s2, 0.0), math.inf, True, tuple(warnings))
    return TdResult(s2, 1.0 / math.sqrt(s2), False, tuple(warnings))


@dataclass(frozen=True)
class EntropySeries:
    """s(t) sampled on a uniform grid starting at t = 0."""

    times: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        s = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != s.shape or t.size < 2:
            raise UsageError("times and values must be equal-length 1-d arrays with >= 2 samples")
        if t[0] != 0.0:
            raise UsageError("series must start at t = 0")
        h = t[1] - t[0]
        if h <= 0 or np.max(np.abs(np.diff(t) - h)) > 1e-9 * max(h, t[-1]):
            raise UsageError("series grid must be uniform and increasing")
        if s[0] > 1e-10:
            raise UsageError(f"s(0) = {s[0]:.3g}; the initial state of system a must be pure")
        if np.any(s < -1e-10) or np.any(s > 1 + 1e-10):
            raise UsageError("entropy values must lie in [0, 1]")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", s)

    @property
    def step(self) -> float:
        return float(self.times[1] - self.times[0])

    def __len__(self) -> int:
        return self.times.size


def fornberg_weights(nodes, order: int) -> np.ndarray:
    """Finite-difference weights at x = 0 for the ``order``-th derivative on ``nodes``."""
    x = np.asarray(nodes, dtype=float)
    n = x.size
    c = np.zeros((n, order + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = x[0]
    for i in range(1, n):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = x[i]
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


class FdEstimate(NamedTuple):
    value: float
    error: float
    accuracy: int


MAX_ACCURACY = 4


def fd_points_needed(order: int, accuracy: int = MAX_ACCURACY) -> int:
    return 2 * (order + accuracy - 1) + 1


def fd_derivative(series: EntropySeries, order: int, rtol: float = 1e-3, atol: float = 1e-8) -> FdEstimate:
    """Estimate s^(order)(0) from the leading samples of ``series``.

    One-sided stencils of accuracy p at steps h and 2h are combined by one
    Richardson level; ``error`` is the gap between the combined and the fine
    estimate. Raises PrecisionError when that gap exceeds
    ``max(atol, rtol*|value|)``.
    """
    if order not in (1, 2, 3, 4):
        raise UsageError(f"derivative order must be 1..4, got {order}")
    n_pts = len(series)
    if n_pts < 2 * order + 3:
        raise UsageError(f"order-{order} estimate needs >= {2 * order + 3} samples, series has {n_pts}")
    p = min(MAX_ACCURACY, (n_pts - 1) // 2 - order + 1)
    m = order + p  # stencil width
    h = series.step
    s = series.values
    w = fornberg_weights(np.arange(m, dtype=float), order)
    fine = float(w @ s[:m]) / h**order
    coarse = float(w @ s[: 2 * m - 1 : 2]) / (2 * h) ** order
    value = (2**p * fine - coarse) / (2**p - 1)
    err = abs(value - fine)
    if err > max(atol, rtol * abs(value)):
        raise PrecisionError(
            f"order-{order} estimate {value:.6g} has error indicator {err:.3g}; "
            f"refine the grid (current step {h:.3g})",
            estimate=value,
            error=err,
        )
    return FdEstimate(value, err, p)
