"""Dense complex linear algebra on small tensor-product spaces.

Index convention: leftmost-factor-major. For a layout ``(d0, d1, ..., dk)`` the
composite basis index of ``(i0, i1, ..., ik)`` is ``i0*d1*...*dk + ... + ik``,
which is exactly what :func:`numpy.kron` and C-order reshapes produce.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import CapacityError, UsageError, ValidationError

DEFAULT_DIM_CAP = 4096
HERMITIAN_RTOL = 1e-12
DENSITY_TRACE_TOL = 1e-10
DENSITY_EIG_TOL = 1e-10


def dim_cap() -> int:
    """Current composite-dimension cap (``DECOQ_DIM_CAP`` overrides the default)."""
    raw = os.environ.get("DECOQ_DIM_CAP")
    if raw is None:
        return DEFAULT_DIM_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise UsageError(f"DECOQ_DIM_CAP must be an integer, got {raw!r}") from None
    if cap < 1:
        raise UsageError("DECOQ_DIM_CAP must be positive")
    return cap


@dataclass(frozen=True)
class SpaceLayout:
    """Ordered subsystem dimensions of a composite Hilbert space."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise UsageError("a layout needs at least one factor")
        if any(d < 1 for d in dims):
            raise UsageError(f"subsystem dimensions must be >= 1, got {dims}")
        object.__setattr__(self, "dims", dims)
        total = math.prod(dims)
        cap = dim_cap()
        if total > cap:
            raise CapacityError(
                f"composite dimension {total} (dims {dims}) exceeds cap {cap}; "
                "set DECOQ_DIM_CAP or reduce truncations"
            )

    @property
    def total(self) -> int:
        return math.prod(self.dims)

    def __len__(self) -> int:
        return len(self.dims)

    def concat(self, other: SpaceLayout) -> SpaceLayout:
        return SpaceLayout(self.dims + other.dims)

    def select(self, indices: Iterable[int]) -> SpaceLayout:
        return SpaceLayout(tuple(self.dims[i] for i in indices))


class QOperator:
    """A dense square complex matrix tagged with the layout it acts on.

    Instances are immutable: the wrapped array is copied and flagged read-only.
    """

    __slots__ = ("layout", "data")

    def __init__(self, data, layout: SpaceLayout | Sequence[int] | None = None):
        arr = np.array(data, dtype=complex, copy=True)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise UsageError(f"operator must be a square matrix, got shape {arr.shape}")
        if layout is None:
            layout = SpaceLayout((arr.shape[0],))
        elif not isinstance(layout, SpaceLayout):
            layout = SpaceLayout(tuple(layout))
        if layout.total != arr.shape[0]:
            raise UsageError(f"matrix size {arr.shape[0]} does not match layout {layout.dims}")
        arr.flags.writeable = False
        self.layout = layout
        self.data = arr

    @property
    def dims(self) -> tuple[int, ...]:
        return self.layout.dims

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def dag(self) -> QOperator:
        return QOperator(self.data.conj().T, self.layout)

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def is_hermitian(self, rtol: float = HERMITIAN_RTOL) -> bool:
        scale = float(np.max(np.abs(self.data))) if self.data.size else 0.0
        if scale == 0.0:
            return True
        return float(np.max(np.abs(self.data - self.data.conj().T))) <= rtol * scale

    def check_hermitian(self, what: str = "operator") -> None:
        if not self.is_hermitian():
            raise ValidationError(f"{what} is not Hermitian within {HERMITIAN_RTOL:g} relative")

    def check_density(self, what: str = "density matrix") -> None:
        """Raise ValidationError unless this is a valid density matrix."""
        self.check_hermitian(what)
        tr = self.trace()
        if abs(tr - 1.0) > DENSITY_TRACE_TOL:
            raise ValidationError(f"{what} has trace {tr.real:.3g}, expected 1")
        lo = float(np.linalg.eigvalsh(_hermitian_part(self.data))[0])
        if lo < -DENSITY_EIG_TOL:
            raise ValidationError(f"{what} has negative eigenvalue {lo:.3g}")

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, QOperator):
            if other.layout != self.layout:
                raise UsageError(f"layout mismatch: {self.dims} vs {other.dims}")
            return other.data
        raise TypeError(f"cannot combine QOperator with {type(other).__name__}")

    def __add__(self, other):
        return QOperator(self.data + self._coerce(other), self.layout)

    def __sub__(self, other):
        return QOperator(self.data - self._coerce(other), self.layout)

    def __matmul__(self, other):
        return QOperator(self.data @ self._coerce(other), self.layout)

    def __mul__(self, scalar):
        if isinstance(scalar, QOperator):
            return NotImplemented
        return QOperator(self.data * complex(scalar), self.layout)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return QOperator(self.data / complex(scalar), self.layout)

    def __neg__(self):
        return QOperator(-self.data, self.layout)

    def __repr__(self) -> str:
        return f"QOperator(dims={self.dims})"


def _hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def identity(layout: SpaceLayout | Sequence[int]) -> QOperator:
    if not isinstance(layout, SpaceLayout):
        layout = SpaceLayout(tuple(layout))
    return QOperator(np.eye(layout.total), layout)


def kron(*ops: QOperator) -> QOperator:
    """Kronecker product; the result's layout concatenates the factors' layouts."""
    if not ops:
        raise UsageError("kron needs at least one operator")
    dims: tuple[int, ...] = ()
    for op in ops:
        dims += op.dims
    layout = SpaceLayout(dims)  # raises CapacityError before allocating
    out = ops[0].data
    for op in ops[1:]:
        out = np.kron(out, op.data)
    return QOperator(out, layout)


def embed(op: QOperator, position: int, layout: SpaceLayout) -> QOperator:
    """Lift a single-factor operator into ``layout`` acting on factor ``position``."""
    return local_product({position: op}, layout)


def local_product(factors: dict[int, QOperator], layout: SpaceLayout) -> QOperator:
    """Tensor product with ``factors[i]`` on factor i and the identity elsewhere.

    Products of operators on distinct factors are built this way in O(D^2)
    rather than by multiplying embedded D x D matrices.
    """
    if not isinstance(layout, SpaceLayout):
        layout = SpaceLayout(tuple(layout))
    for pos, op in factors.items():
        if not 0 <= pos < len(layout):
            raise UsageError(f"factor index {pos} out of range for {len(layout)} factors")
        if layout.dims[pos] != op.dim:
            raise UsageError(f"factor {pos} has dim {layout.dims[pos]}, operator has {op.dim}")
    out = np.ones((1, 1), dtype=complex)
    run = 1  # pending identity dimension
    for pos, d in enumerate(layout.dims):
        if pos in factors:
            if run > 1:
                out = np.kron(out, np.eye(run))
                run = 1
            out = np.kron(out, factors[pos].data)
        else:
            run *= d
    if run > 1:
        out = np.kron(out, np.eye(run))
    return QOperator(out, layout)


def _normalize_keep(keep, n: int) -> tuple[int, ...]:
    if isinstance(keep, (int, np.integer)):
        keep = (int(keep),)
    keep = tuple(sorted(set(int(k) for k in keep)))
    if not keep:
        raise UsageError("partial_trace: keep set is empty")
    if keep[0] < 0 or keep[-1] >= n:
        raise UsageError(f"partial_trace: keep indices {keep} out of range for {n} factors")
    return keep


def partial_trace(rho: QOperator, keep) -> QOperator:
    """Trace out every factor not listed in ``keep``.

    Works for any operator on the layout, not only density matrices; the
    entropy derivatives reduce commutators with it.
    """
    dims = rho.dims
    keep = _normalize_keep(keep, len(dims))
    if len(keep) == len(dims):
        return rho
    if len(dims) == 2:
        da, db = dims
        return QOperator(kernels.ptrace_bipartite(rho.data, da, db, keep[0] == 0), rho.layout.select(keep))
    n = len(dims)
    tensor = rho.data.reshape(dims + dims)
    row_idx = list(range(n))
    col_idx = [n + i if i in keep else i for i in range(n)]
    out_idx = list(keep) + [n + i for i in keep]
    reduced = np.einsum(tensor, row_idx + col_idx, out_idx)
    kept = rho.layout.select(keep)
    return QOperator(reduced.reshape(kept.total, kept.total), kept)


def commutator(a: QOperator, b: QOperator) -> QOperator:
    if a.layout != b.layout:
        raise UsageError(f"layout mismatch: {a.dims} vs {b.dims}")
    return QOperator(a.data @ b.data - b.data @ a.data, a.layout)


def trace_of_product(a: QOperator, b: QOperator) -> complex:
    """tr(AB) without forming the product."""
    if a.layout != b.layout:
        raise UsageError(f"layout mismatch: {a.dims} vs {b.dims}")
    return complex(kernels.trace_product(a.data, b.data))


def expectation(op: QOperator, rho: QOperator) -> complex:
    return trace_of_product(op, rho)


class UnitaryPropagator:
    """exp(-iHt) for a fixed Hermitian H, diagonalized once.

    ``H = Q diag(w) Q^dagger``; every propagation reuses ``Q`` and ``w``.
    """

    def __init__(self, H: QOperator):
        H.check_hermitian("generator H")
        self.layout = H.layout
        self.energies, self.basis = np.linalg.eigh(_hermitian_part(H.data))

    def unitary(self, t: float) -> QOperator:
        q = self.basis
        return QOperator((q * np.exp(-1j * self.energies * t)) @ q.conj().T, self.layout)

    def evolve(self, rho0: QOperator, t: float) -> QOperator:
        if rho0.layout != self.layout:
            raise UsageError(f"layout mismatch: {rho0.dims} vs {self.layout.dims}")
        u = self.unitary(t).data
        return QOperator(u @ rho0.data @ u.conj().T, self.layout)


def evolve_unitary(rho0: QOperator, H: QOperator, t: float) -> QOperator:
    """rho(t) = exp(-iHt) rho0 exp(iHt) with hbar = 1."""
    if rho0.layout != H.layout:
        raise UsageError(f"layout mismatch: {rho0.dims} vs {H.dims}")
    return UnitaryPropagator(H).evolve(rho0, t)


def ket_to_dm(psi: np.ndarray, layout: SpaceLayout | Sequence[int] | None = None) -> QOperator:
    psi = np.asarray(psi, dtype=complex).ravel()
    return QOperator(np.outer(psi, psi.conj()), layout)
