"""Spin-1/2 and single-mode bosonic states, ladder operators, quadrature statistics.

Qubit basis order is ``(|1>, |0>)``: the upper level comes first, so
``sigma_z = |1><1| - |0><0| = diag(+1, -1)`` and ``<sigma_z> = cos(theta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import gammainc, gammaln

from .errors import TruncationError, UsageError
from .linalg import QOperator, ket_to_dm

DEFAULT_TRUNCATION = 60
DEFAULT_LEAK_TOL = 1e-6
MAX_TRUNCATION = 4096

BOSON_KINDS = ("fock", "thermal", "coherent", "squeezed_vacuum")


@dataclass(frozen=True)
class QubitStateSpec:
    """Bloch-sphere angles. theta=0 is the upper pole |1>, theta=pi the lower |0>."""

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.theta <= math.pi + 1e-12):
            raise UsageError(f"theta must lie in [0, pi], got {self.theta}")
        if not math.isfinite(self.phi):
            raise UsageError("phi must be finite")


def make_qubit(spec: QubitStateSpec) -> np.ndarray:
    c = math.cos(spec.theta / 2)
    s = math.sin(spec.theta / 2)
    return np.array([c, np.exp(1j * spec.phi) * s], dtype=complex)


def orthogonal_qubit(spec: QubitStateSpec) -> QubitStateSpec:
    """The antipodal Bloch point, i.e. the state orthogonal to ``spec``."""
    return QubitStateSpec(math.pi - spec.theta, (spec.phi + math.pi) % (2 * math.pi))


def pauli_ops() -> dict[str, QOperator]:
    sp = np.array([[0, 1], [0, 0]], dtype=complex)  # |1><0|
    sm = sp.T.copy()
    return {
        "sz": QOperator(np.diag([1.0, -1.0])),
        "sp": QOperator(sp),
        "sm": QOperator(sm),
        "sx": QOperator(sp + sm),
        "sy": QOperator(-1j * sp + 1j * sm),
        "id": QOperator(np.eye(2)),
    }


def ladder_ops(n_levels: int) -> dict[str, QOperator]:
    """Truncated b, b^dagger, the quadrature b + b^dagger and the number operator."""
    if n_levels < 1:
        raise UsageError("truncation must be >= 1")
    b = np.diag(np.sqrt(np.arange(1, n_levels, dtype=float)), k=1).astype(complex)
    bd = b.conj().T
    return {
        "b": QOperator(b),
        "bd": QOperator(bd),
        "x": QOperator(b + bd),
        "n": QOperator(np.diag(np.arange(n_levels, dtype=complex))),
    }


def _parse_complex(value) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise UsageError(f"complex value must be [re, im], got {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, dict):
        return complex(float(value.get("re", 0.0)), float(value.get("im", 0.0)))
    return complex(value)


@dataclass(frozen=True)
class BosonStateSpec:
    """Declarative single-mode state.

    ``param`` means: Fock number n, thermal mean occupation, coherent amplitude
    alpha (complex; ``[re, im]`` accepted) or squeezing parameter r. Positive r
    reduces the b + b^dagger variance to exp(-2r).
    """

    kind: str
    param: object = 0
    truncation: int = DEFAULT_TRUNCATION
    leak_tol: float = DEFAULT_LEAK_TOL

    def __post_init__(self):
        if self.kind not in BOSON_KINDS:
            raise UsageError(f"unknown boson state kind {self.kind!r}; expected one of {BOSON_KINDS}")
        if int(self.truncation) < 1:
            raise UsageError("truncation must be >= 1")
        object.__setattr__(self, "truncation", int(self.truncation))
        if self.kind == "fock":
            n = self.param
            if isinstance(n, bool) or int(n) != n or int(n) < 0:
                raise UsageError(f"Fock number must be a non-negative integer, got {n!r}")
            object.__setattr__(self, "param", int(n))
        elif self.kind == "thermal":
            nbar = float(self.param)
            if not (nbar >= 0 and math.isfinite(nbar)):
                raise UsageError(f"thermal mean occupation must be >= 0, got {self.param!r}")
            object.__setattr__(self, "param", nbar)
        elif self.kind == "coherent":
            object.__setattr__(self, "param", _parse_complex(self.param))
        else:
            r = float(self.param)
            if not math.isfinite(r):
                raise UsageError("squeezing parameter must be finite")
            object.__setattr__(self, "param", r)
        if not (0 < self.leak_tol < 1):
            raise UsageError("leak_tol must lie in (0, 1)")

    @property
    def is_pure(self) -> bool:
        return self.kind != "thermal" or self.param == 0.0

    def nominal_mean(self) -> float:
        """Untruncated mean boson number."""
        if self.kind == "fock":
            return float(self.param)
        if self.kind == "thermal":
            return float(self.param)
        if self.kind == "coherent":
            return abs(self.param) ** 2
        return math.sinh(self.param) ** 2


@dataclass(frozen=True)
class BosonState:
    spec: BosonStateSpec
    rho: QOperator
    ket: np.ndarray | None
    leakage: float
    norm_factor: float = field(default=1.0)

    @property
    def truncation(self) -> int:
        return self.spec.truncation


def _coherent_amplitudes(alpha: complex, n_levels: int) -> np.ndarray:
    n = np.arange(n_levels)
    lam = abs(alpha) ** 2
    if lam == 0.0:
        out = np.zeros(n_levels, dtype=complex)
        out[0] = 1.0
        return out
    mag = np.exp(-lam / 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1))
    return mag * np.exp(1j * n * np.angle(alpha))


def _squeezed_amplitudes(r: float, n_levels: int) -> np.ndarray:
    out = np.zeros(n_levels, dtype=complex)
    if r == 0.0:
        out[0] = 1.0
        return out
    t = math.tanh(r)
    m = np.arange((n_levels + 1) // 2)
    # |c_2m| = |tanh r|^m sqrt((2m)!) / (2^m m!) / sqrt(cosh r)
    logmag = m * math.log(abs(t)) + 0.5 * gammaln(2 * m + 1) - m * math.log(2) - gammaln(m + 1)
    logmag -= 0.5 * math.log(math.cosh(r))
    out[0::2] = np.exp(logmag) * (-np.sign(t)) ** m
    return out


def _leakage(kind: str, param, n_levels: int) -> float:
    if kind == "fock":
        return 0.0 if param < n_levels else 1.0
    if kind == "thermal":
        if param == 0.0:
            return 0.0
        return (param / (1 + param)) ** n_levels
    if kind == "coherent":
        lam = abs(param) ** 2
        return float(gammainc(n_levels, lam)) if lam > 0 else 0.0
    amps = _squeezed_amplitudes(param, n_levels)
    return max(0.0, 1.0 - float(np.sum(np.abs(amps) ** 2)))


def leakage(spec: BosonStateSpec, n_levels: int | None = None) -> float:
    """Weight of the untruncated state beyond the first ``n_levels`` Fock levels."""
    return _leakage(spec.kind, spec.param, spec.truncation if n_levels is None else n_levels)


def required_truncation(spec: BosonStateSpec, leak_tol: float | None = None) -> int:
    """Smallest truncation whose leakage is within ``leak_tol``."""
    tol = spec.leak_tol if leak_tol is None else leak_tol
    if spec.kind == "fock":
        return spec.param + 1
    if spec.kind == "thermal":
        if spec.param == 0.0:
            return 1
        q = spec.param / (1 + spec.param)
        n = max(1, math.ceil(math.log(tol) / math.log(q)))
        while n > 1 and _leakage("thermal", spec.param, n - 1) <= tol:
            n -= 1
        while _leakage("thermal", spec.param, n) > tol:
            n += 1
        return n
    n = 1
    while _leakage(spec.kind, spec.param, n) > tol:
        n += 1
        if n > MAX_TRUNCATION:
            raise TruncationError(f"no truncation below {MAX_TRUNCATION} reaches leakage {tol:g}")
    return n


def make_boson(spec: BosonStateSpec) -> BosonState:
    """Build the truncated state; fails loudly if too much weight leaks out."""
    n_levels = spec.truncation
    leak = leakage(spec)
    if leak > spec.leak_tol:
        need = required_truncation(spec)
        raise TruncationError(
            f"{spec.kind} state (param={spec.param!r}) leaks {leak:.3g} beyond {n_levels} levels "
            f"(tolerance {spec.leak_tol:g}); use truncation >= {need}",
            required=need,
        )
    if spec.kind == "thermal":
        if spec.param == 0.0:
            p = np.zeros(n_levels)
            p[0] = 1.0
        else:
            q = spec.param / (1 + spec.param)
            p = q ** np.arange(n_levels) / (1 + spec.param)
        total = float(p.sum())
        rho = QOperator(np.diag(p / total))
        ket = None
        if spec.param == 0.0:
            ket = np.zeros(n_levels, dtype=complex)
            ket[0] = 1.0
        return BosonState(spec, rho, ket, leak, 1.0 / total)
    if spec.kind == "fock":
        ket = np.zeros(n_levels, dtype=complex)
        ket[spec.param] = 1.0
        norm = 1.0
    elif spec.kind == "coherent":
        ket = _coherent_amplitudes(spec.param, n_levels)
        norm = float(np.linalg.norm(ket))
    else:
        ket = _squeezed_amplitudes(spec.param, n_levels)
        norm = float(np.linalg.norm(ket))
    ket = ket / norm
    return BosonState(spec, ket_to_dm(ket), ket, leak, 1.0 / norm**2)


class QuadratureStats(NamedTuple):
    mean: float
    variance: float

    @property
    def rms(self) -> float:
        return math.sqrt(self.variance)


def quadrature_stats(rho: QOperator, angle: float = 0.0) -> QuadratureStats:
    """Mean and variance of ``b e^{-i angle} + b^dagger e^{i angle}`` (angle 0: b + b^dagger).

    Moments are taken on the truncated space as given.
    """
    ops = ladder_ops(rho.dim)
    b = ops["b"].data
    x = np.exp(-1j * angle) * b
    x = x + x.conj().T
    r = rho.data
    mean = np.einsum("ij,ji->", x, r).real
    second = np.einsum("ij,ji->", x @ x, r).real
    return QuadratureStats(float(mean), float(max(second - mean**2, 0.0)))


def mean_number(rho: QOperator) -> float:
    return float(np.real(np.diagonal(rho.data) @ np.arange(rho.dim)))
