"""The three worked models: pure dephasing, a cavity mode coupled to thermal
light, and the driven dispersive spin-boson model.

Each ``build_*`` returns a :class:`BuiltModel` holding the generator used for
exact evolution and the :class:`~decoq.entropy.InitialCondition` for the
s''(0) routes. Each ``td_*`` evaluates the corresponding closed form.
System a is always factor 0 of the composite layout.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .entropy import InitialCondition, TdResult, td_from_s2
from .errors import UsageError
from .linalg import QOperator, SpaceLayout, UnitaryPropagator, identity, kron, local_product, trace_of_product
from .states import (
    DEFAULT_LEAK_TOL,
    BosonStateSpec,
    QubitStateSpec,
    ladder_ops,
    make_boson,
    make_qubit,
    mean_number,
    pauli_ops,
    quadrature_stats,
    required_truncation,
)

DISPERSIVE_LIMIT = 0.1


@dataclass(frozen=True)
class BuiltModel:
    H: QOperator
    ic: InitialCondition
    boson_factors: tuple[int, ...]
    leakage: tuple[float, ...] = ()
    warnings: tuple[str, ...] = ()

    @property
    def layout(self) -> SpaceLayout:
        return self.H.layout

    @property
    def truncations(self) -> tuple[int, ...]:
        return tuple(self.layout.dims[i] for i in self.boson_factors)


def spec_hash(spec) -> str:
    """Stable short hash of a model spec (dataclass tree)."""
    payload = json.dumps(dataclasses.asdict(spec), sort_keys=True, default=repr)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _sigma_z_factor(qubit: QubitStateSpec) -> float:
    """1 - <sigma_z>^2 for the qubit spec, i.e. sin^2(theta)."""
    return math.sin(qubit.theta) ** 2


def _pole_result(s2_coeff: float, qubit: QubitStateSpec, warnings=()) -> TdResult:
    return td_from_s2(s2_coeff * _sigma_z_factor(qubit), warnings=tuple(warnings))


# --- pure dephasing -------------------------------------------------------


@dataclass(frozen=True)
class PureDephasingSpec:
    g: float
    qubit: QubitStateSpec
    boson: BosonStateSpec

    def __post_init__(self):
        if not (self.g >= 0 and math.isfinite(self.g)):
            raise UsageError(f"coupling g must be >= 0, got {self.g}")


def build_pure_dephasing(spec: PureDephasingSpec) -> BuiltModel:
    """V = g (b + b^dagger) sigma_z on qubit (x) boson."""
    boson = make_boson(spec.boson)
    sz = pauli_ops()["sz"]
    x = ladder_ops(spec.boson.truncation)["x"]
    V = spec.g * kron(sz, x)
    ic = InitialCondition(make_qubit(spec.qubit), boson.rho, V)
    return BuiltModel(V, ic, (1,), (boson.leakage,))


def td_pure_dephasing(spec: PureDephasingSpec) -> TdResult:
    """t_d = 1 / (2 g rms(b + b^dagger) sqrt(1 - <sigma_z>^2))."""
    boson = make_boson(spec.boson)
    var = quadrature_stats(boson.rho).variance
    return _pole_result(4 * spec.g**2 * var, spec.qubit)


# --- cavity driven by thermal light ---------------------------------------


@dataclass(frozen=True)
class ThermalMode:
    """One mode of the thermal light; ``truncation=None`` picks it from ``leak_tol``."""

    g: float
    nbar: float = 0.0
    truncation: int | None = None
    leak_tol: float = DEFAULT_LEAK_TOL

    def __post_init__(self):
        if not (self.g > 0 and math.isfinite(self.g)):
            raise UsageError(f"mode coupling g_j must be real and > 0, got {self.g}")
        if not (self.nbar >= 0 and math.isfinite(self.nbar)):
            raise UsageError(f"mode occupation must be >= 0, got {self.nbar}")

    def state_spec(self) -> BosonStateSpec:
        probe = BosonStateSpec("thermal", self.nbar, 1, self.leak_tol)
        n = self.truncation if self.truncation is not None else required_truncation(probe)
        return BosonStateSpec("thermal", self.nbar, n, self.leak_tol)


@dataclass(frozen=True)
class CavityThermalSpec:
    """Cavity in a pure state, coupled to thermal modes by V = sum_j g_j (a r_j^dag + a^dag r_j).

    The cavity state is either a pure BosonStateSpec or explicit Fock
    amplitudes; ``cavity_truncation`` sets the cavity factor dimension.
    """

    modes: tuple[ThermalMode, ...]
    cavity_state: BosonStateSpec | None = None
    cavity_amplitudes: tuple[complex, ...] | None = None
    cavity_truncation: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        if not self.modes:
            raise UsageError("cavity model needs at least one thermal mode")
        if (self.cavity_state is None) == (self.cavity_amplitudes is None):
            raise UsageError("give exactly one of cavity_state or cavity_amplitudes")
        if self.cavity_state is not None and not self.cavity_state.is_pure:
            raise UsageError("the cavity initial state must be pure (thermal n>0 is mixed)")
        if self.cavity_amplitudes is not None:
            object.__setattr__(self, "cavity_amplitudes", tuple(complex(a) for a in self.cavity_amplitudes))

    @property
    def gamma(self) -> float:
        return sum(m.g**2 for m in self.modes)

    @property
    def gamma_T(self) -> float:
        return sum(m.g**2 * m.nbar for m in self.modes)

    def cavity_ket(self) -> np.ndarray:
        if self.cavity_amplitudes is not None:
            amps = np.asarray(self.cavity_amplitudes, dtype=complex)
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise UsageError("cavity amplitudes are all zero")
            n = self.cavity_truncation or amps.size + 1
            if n < amps.size:
                raise UsageError("cavity_truncation is smaller than the amplitude list")
            ket = np.zeros(n, dtype=complex)
            ket[: amps.size] = amps / norm
            return ket
        st = self.cavity_state
        if self.cavity_truncation is not None:
            st = dataclasses.replace(st, truncation=self.cavity_truncation)
        return make_boson(st).ket


def build_cavity_thermal(spec: CavityThermalSpec) -> BuiltModel:
    psi = spec.cavity_ket()
    baths = [make_boson(m.state_spec()) for m in spec.modes]
    layout = SpaceLayout((psi.size,) + tuple(b.truncation for b in baths))
    a = ladder_ops(psi.size)
    V = QOperator(np.zeros((layout.total, layout.total)), layout)
    for j, (mode, bath) in enumerate(zip(spec.modes, baths), start=1):
        r = ladder_ops(bath.truncation)
        V = V + mode.g * (local_product({0: a["b"], j: r["bd"]}, layout) + local_product({0: a["bd"], j: r["b"]}, layout))
    rho_R = kron(*[b.rho for b in baths])
    ic = InitialCondition(psi, rho_R, V)
    return BuiltModel(V, ic, tuple(range(len(layout))), tuple(b.leakage for b in baths))


def td_cavity(spec: CavityThermalSpec) -> TdResult:
    """t_d = 1 / (2 sqrt((gamma + 2 gamma_T)(<a^dag a> - <a^dag><a>) + gamma_T)).

    Named cavity states use their untruncated moments; explicit amplitudes
    use the moments of the given vector.
    """
    st = spec.cavity_state
    if st is not None:
        mean_a = st.param if st.kind == "coherent" else 0.0
        mean_n = st.nominal_mean()
    else:
        psi = spec.cavity_ket()
        ops = ladder_ops(psi.size)
        mean_a = complex(psi.conj() @ ops["b"].data @ psi)
        mean_n = float(np.real(psi.conj() @ ops["n"].data @ psi))
    spread = max(mean_n - abs(mean_a) ** 2, 0.0)
    s2 = 4.0 * ((spec.gamma + 2 * spec.gamma_T) * spread + spec.gamma_T)
    return td_from_s2(s2)


# --- dispersive spin-boson model ------------------------------------------


@dataclass(frozen=True)
class BathMode:
    """Bath mode k: coupling g_k, frequency omega_k, occupation (or from temperature)."""

    g: float
    omega: float
    nbar: float | None = None
    truncation: int | None = None

    def __post_init__(self):
        if not (self.g >= 0 and math.isfinite(self.g)):
            raise UsageError(f"g_k must be >= 0, got {self.g}")
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise UsageError(f"omega_k must be > 0, got {self.omega}")
        if self.nbar is not None and not self.nbar >= 0:
            raise UsageError(f"nbar_k must be >= 0, got {self.nbar}")


def bose_occupation(omega: float, kT: float) -> float:
    if kT <= 0:
        return 0.0
    return 1.0 / math.expm1(omega / kT)


@dataclass(frozen=True)
class SpinBosonSpec:
    """Driven two-level system dispersively coupled to bath modes.

    ``delta`` is the qubit detuning from the drive, ``delta_G`` the bare
    splitting, ``omega_rabi`` the drive strength. ``temperature`` is kT in
    frequency units; when set it fixes every n_k by the Bose law.
    """

    delta: float
    delta_G: float
    omega_rabi: float
    modes: tuple[BathMode, ...]
    qubit: QubitStateSpec
    temperature: float | None = None
    leak_tol: float = DEFAULT_LEAK_TOL

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        if not self.modes:
            raise UsageError("spin-boson model needs at least one bath mode")
        if self.delta_G == 0:
            raise UsageError("delta_G must be non-zero")
        if self.temperature is not None and not self.temperature >= 0:
            raise UsageError("temperature must be >= 0")

    @property
    def drive_frequency(self) -> float:
        return self.delta_G - self.delta

    def mode_detunings(self) -> tuple[float, ...]:
        wf = self.drive_frequency
        return tuple(m.omega - wf for m in self.modes)

    def occupations(self) -> tuple[float, ...]:
        if self.temperature is not None:
            return tuple(bose_occupation(m.omega, self.temperature) for m in self.modes)
        return tuple(m.nbar or 0.0 for m in self.modes)

    def epsilons(self) -> list[dict]:
        out = []
        for m, dk in zip(self.modes, self.mode_detunings()):
            eps_k = abs(m.g / dk) if dk != 0 else math.inf
            out.append({"eps_k": eps_k, "eps_G": abs(m.g / self.delta_G)})
        return out

    def validity_warnings(self) -> tuple[str, ...]:
        warns = []
        for k, e in enumerate(self.epsilons()):
            if e["eps_k"] > DISPERSIVE_LIMIT or e["eps_G"] > DISPERSIVE_LIMIT:
                warns.append(
                    f"mode {k}: dispersive parameter g/Delta_k={e['eps_k']:.3g}, "
                    f"g/Delta_G={e['eps_G']:.3g} exceeds {DISPERSIVE_LIMIT}"
                )
        return tuple(warns)

    def bath_state_specs(self) -> list[BosonStateSpec]:
        specs = []
        for m, nbar in zip(self.modes, self.occupations()):
            probe = BosonStateSpec("thermal", nbar, 1, self.leak_tol)
            n = m.truncation if m.truncation is not None else max(2, required_truncation(probe))
            specs.append(BosonStateSpec("thermal", nbar, n, self.leak_tol))
        return specs


@dataclass(frozen=True)
class SpinBosonModel(BuiltModel):
    H_eff: QOperator | None = None
    H0: QOperator | None = None
    B0: QOperator | None = None
    bath_rho: QOperator | None = None
    centering: tuple[float, ...] = field(default=())


def _spin_boson_parts(spec: SpinBosonSpec):
    baths = [make_boson(s) for s in spec.bath_state_specs()]
    layout = SpaceLayout((2,) + tuple(b.truncation for b in baths))
    ops = [ladder_ops(b.truncation) for b in baths]
    return baths, layout, ops, pauli_ops()


def build_spin_boson_full(spec: SpinBosonSpec) -> QOperator:
    """H = Delta sz + sum Delta_k b^dag b + Omega (s+ + s-) + sum g_k (b_k s+ + b_k^dag s-)."""
    _, layout, ops, p = _spin_boson_parts(spec)
    H = local_product({0: spec.delta * p["sz"] + spec.omega_rabi * p["sx"]}, layout)
    for k, (m, dk, b) in enumerate(zip(spec.modes, spec.mode_detunings(), ops), start=1):
        H = H + dk * local_product({k: b["n"]}, layout)
        H = H + m.g * (local_product({0: p["sp"], k: b["b"]}, layout) + local_product({0: p["sm"], k: b["bd"]}, layout))
    return H


def _bath_pair(layout: SpaceLayout, ops, k: int, q: int, offset: int = 1) -> QOperator:
    """b_k^dag b_q on ``layout``, where mode k sits at factor k + offset."""
    if k == q:
        factors = {k + offset: ops[k]["n"]}
    else:
        factors = {k + offset: ops[k]["bd"], q + offset: ops[q]["b"]}
    return local_product(factors, layout)


def build_spin_boson_eff(spec: SpinBosonSpec) -> SpinBosonModel:
    """Effective dispersive Hamiltonian, its free part H0 and V(0) = Omega sx + B(0) sz.

    B(0) = 2 Omega sum_k (g_k/Delta_G)(b_k + b_k^dag)
           + sum_{k,k'} (g_k g_k'/Delta_G)(b_k^dag b_k' - n_k delta_kk').

    The subtracted n_k is the mean occupation of the truncated thermal
    state, so <B(0)> vanishes to rounding.

    ``H_eff`` carries the bilinear bath term with weight 2, while B(0) has
    weight 1. The propagated generator ``H`` is H0 + V(0), so that simulated
    series and the <B^2> closed form describe the same dynamics; ``H_eff``
    is kept for the Lie-rotation check.
    """
    baths, layout, ops, p = _spin_boson_parts(spec)
    bath_layout = SpaceLayout(layout.dims[1:])
    dG = spec.delta_G
    om = spec.omega_rabi
    gs = [m.g for m in spec.modes]
    stark = sum(g * g for g in gs) / dG
    H0 = local_product({0: spec.delta * p["sz"] + stark * (p["sp"] @ p["sm"])}, layout)
    for k, (dk, b) in enumerate(zip(spec.mode_detunings(), ops), start=1):
        H0 = H0 + dk * local_product({k: b["n"]}, layout)

    # bath-only pieces on the bath layout, lifted with sz afterwards
    linear = QOperator(np.zeros((bath_layout.total,) * 2), bath_layout)
    bilinear = linear
    for k, (g, b) in enumerate(zip(gs, ops)):
        linear = linear + (g / dG) * local_product({k: b["x"]}, bath_layout)
    for k, gk in enumerate(gs):
        for q, gq in enumerate(gs):
            if gk * gq != 0:
                bilinear = bilinear + (gk * gq / dG) * _bath_pair(bath_layout, ops, k, q, offset=0)
    centering = tuple(mean_number(b.rho) for b in baths)
    shift = sum(g * g / dG * n for g, n in zip(gs, centering))
    B0 = 2.0 * om * linear + bilinear - shift * identity(bath_layout)

    sz = p["sz"]
    drive = local_product({0: om * p["sx"]}, layout)
    H_eff = H0 + drive + kron(2.0 * sz, bilinear + om * linear)
    V0 = drive + kron(sz, B0)

    bath_rho = kron(*[b.rho for b in baths])
    ic = InitialCondition(make_qubit(spec.qubit), bath_rho, V0)
    return SpinBosonModel(
        H=H0 + V0,
        ic=ic,
        boson_factors=tuple(range(1, len(layout))),
        leakage=tuple(b.leakage for b in baths),
        warnings=spec.validity_warnings(),
        H_eff=H_eff,
        H0=H0,
        B0=B0,
        bath_rho=bath_rho,
        centering=centering,
    )


def h_eff_interaction(model: SpinBosonModel) -> InitialCondition:
    """Initial condition whose V(0) is H_eff - H0, the interaction implied by H_eff."""
    return InitialCondition(model.ic.psi, model.ic.rho_R, model.H_eff - model.H0)


def lie_generator(spec: SpinBosonSpec) -> QOperator:
    """S = sum_k eps_k (b_k s+ - b_k^dag s-) with eps_k = g_k / Delta_k."""
    _, layout, ops, p = _spin_boson_parts(spec)
    S = QOperator(np.zeros((layout.total, layout.total)), layout)
    for k, (m, dk, b) in enumerate(zip(spec.modes, spec.mode_detunings(), ops), start=1):
        if m.g == 0:
            continue
        if dk == 0:
            raise UsageError("Lie rotation needs non-zero mode detunings Delta_k")
        S = S + (m.g / dk) * (local_product({0: p["sp"], k: b["b"]}, layout) - local_product({0: p["sm"], k: b["bd"]}, layout))
    return S


def lie_transform_residual(spec: SpinBosonSpec) -> float:
    """Spectral norm of U H U^dagger - H_eff on the truncated space, U = exp(S)."""
    H = build_spin_boson_full(spec)
    H_eff = build_spin_boson_eff(spec).H_eff
    S = lie_generator(spec)
    # S is anti-Hermitian: exp(S) = exp(-i (iS)) with iS Hermitian
    U = UnitaryPropagator(1j * S).unitary(1.0)
    rotated = U @ H @ U.dag
    return float(np.linalg.norm((rotated - H_eff).data, 2))


def b2_expectation(spec: SpinBosonSpec) -> float:
    """Closed-form <B^2>_R over the thermal bath."""
    dG2 = spec.delta_G**2
    gs = [m.g for m in spec.modes]
    ns = spec.occupations()
    linear = 4 * spec.omega_rabi**2 / dG2 * sum(g * g * (2 * n + 1) for g, n in zip(gs, ns))
    bilinear = sum(
        gk * gk * gq * gq / dG2 * (nq + 1) * nk for gk, nk in zip(gs, ns) for gq, nq in zip(gs, ns)
    )
    return linear + bilinear


def b2_matrix_expectation(model: SpinBosonModel) -> float:
    """tr(rho_R B(0)^2) on the truncated bath: the brute-force route."""
    B = model.B0
    return float(trace_of_product(B @ B, model.bath_rho).real)


def b_mean(model: SpinBosonModel) -> float:
    return float(trace_of_product(model.B0, model.bath_rho).real)


def td_spin_boson(spec: SpinBosonSpec) -> TdResult:
    """t_d = 1 / (2 sqrt(<B^2>_R (1 - <sigma_z>^2)))."""
    return _pole_result(4.0 * b2_expectation(spec), spec.qubit, spec.validity_warnings())


def high_temperature_gamma(spec: SpinBosonSpec) -> float:
    """gamma = sum_k g_k^2 / omega_k."""
    return sum(m.g**2 / m.omega for m in spec.modes)


def td_spin_boson_limit(spec: SpinBosonSpec, regime: str) -> TdResult:
    """High-temperature limits with n_k = kT/omega_k.

    strong (Omega >> g_k): t_d = Delta_G / (4 Omega sqrt(2 kT gamma (1 - <sz>^2)))
    weak   (Omega << g_k): t_d = Delta_G / (2 kT gamma sqrt(1 - <sz>^2))
    """
    if spec.temperature is None:
        raise UsageError("regime limits need a temperature")
    kT = spec.temperature
    gamma = high_temperature_gamma(spec)
    sin2 = _sigma_z_factor(spec.qubit)
    warns = list(spec.validity_warnings())
    gmax = max((m.g for m in spec.modes), default=0.0)
    gmin = min((m.g for m in spec.modes), default=0.0)
    wmax = max((m.omega for m in spec.modes), default=0.0)
    if wmax and kT < 10 * wmax:
        warns.append(f"high-temperature limit assumed but kT/omega_k = {kT / wmax:.3g} < 10")
    if regime == "strong":
        if spec.omega_rabi < 10 * gmax:
            warns.append(f"strong-field limit assumed but Omega/g = {spec.omega_rabi / gmax if gmax else math.inf:.3g} < 10")
        s2 = 32.0 * spec.omega_rabi**2 * kT * gamma * sin2 / spec.delta_G**2
    elif regime == "weak":
        if spec.omega_rabi > 0.1 * gmin:
            warns.append(f"weak-field limit assumed but Omega/g = {spec.omega_rabi / gmin if gmin else math.inf:.3g} > 0.1")
        s2 = 4.0 * (kT * gamma) ** 2 * sin2 / spec.delta_G**2
    else:
        raise UsageError(f"regime must be 'strong' or 'weak', got {regime!r}")
    return td_from_s2(s2, warnings=tuple(warns))
