import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_density, random_hermitian, random_ket
import decoq.entropy as entropy_mod
from decoq.entropy import (
    EntropySeries,
    InitialCondition,
    bath_average,
    fd_derivative,
    fd_points_needed,
    fornberg_weights,
    linear_entropy,
    s2_direct,
    s2_eq3,
    td_from_s2,
)
from decoq.errors import ConsistencyError, PrecisionError, UsageError
from decoq.linalg import QOperator, identity, kron
from decoq.models import PureDephasingSpec, build_pure_dephasing
from decoq.states import BosonStateSpec, QubitStateSpec, ladder_ops, make_boson, make_qubit, pauli_ops


def _random_ic(rng, da, dr):
    psi = random_ket(rng, da)
    rho_r = QOperator(random_density(rng, dr))
    v = QOperator(random_hermitian(rng, da * dr), (da, dr))
    return InitialCondition(psi, rho_r, v)


def _pd_ic(theta=math.pi / 2, phi=0.0, boson=("fock", 3, 10), g=1.0):
    return build_pure_dephasing(PureDephasingSpec(g, QubitStateSpec(theta, phi), BosonStateSpec(*boson))).ic


def test_linear_entropy_examples():
    assert abs(linear_entropy(QOperator(np.diag([1.0, 0.0])))) < 1e-15
    assert abs(linear_entropy(identity((2,)) / 2) - 0.5) < 1e-15
    rho = make_boson(BosonStateSpec("thermal", 3.0, 80)).rho
    assert abs(linear_entropy(rho) - 6 / 7) < 1e-6


def test_initial_condition_validation(rng):
    rho_r = QOperator(random_density(rng, 3))
    with pytest.raises(UsageError):
        InitialCondition(np.array([1.0, 1.0]), rho_r, identity((2, 3)))
    with pytest.raises(UsageError):
        InitialCondition(np.array([1.0, 0.0]), rho_r, identity((2, 2)))


def test_s2_fock():
    ic = _pd_ic()
    assert abs(s2_direct(ic) - 28) < 1e-10
    assert abs(s2_eq3(ic) - 28) < 1e-10


@pytest.mark.parametrize("theta", [0.0, math.pi])
def test_s2_eigenstate_of_sz(theta):
    ic = _pd_ic(theta)
    assert s2_direct(ic) == 0.0
    assert s2_eq3(ic) == 0.0


def test_s2_squeezed():
    ic = _pd_ic(boson=("squeezed_vacuum", math.asinh(math.sqrt(3)), 120))
    expected = 4 * (7 - 4 * math.sqrt(3))
    assert abs(s2_eq3(ic) - expected) < 1e-4
    assert abs(s2_direct(ic) - s2_eq3(ic)) < 1e-12


def test_local_generator_gives_zero(rng):
    rho_r = QOperator(random_density(rng, 3))
    v = kron(pauli_ops()["sx"], identity((3,))) * 0.7
    ic = InitialCondition(random_ket(rng, 2), rho_r, v)
    assert abs(s2_direct(ic)) < 1e-12
    assert abs(s2_eq3(ic)) < 1e-12


def test_bath_average_of_product(rng):
    a = random_hermitian(rng, 2)
    b = random_hermitian(rng, 3)
    ic = _random_ic(rng, 2, 3)
    avg = bath_average(ic, kron(QOperator(a), QOperator(b)))
    np.testing.assert_allclose(avg.data, a * np.trace(ic.rho_R.data @ b), atol=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(2, 4), st.integers(0, 2**31))
def test_routes_agree_and_are_nonnegative(da, dr, seed):
    ic = _random_ic(np.random.default_rng(seed), da, dr)
    d, e = s2_direct(ic), s2_eq3(ic)
    assert d >= 0 and e >= 0
    assert abs(d - e) <= 1e-9 * max(abs(d), 1e-12) + 1e-12


def test_s2_matches_second_derivative_of_exact_purity(rng):
    from scipy.linalg import expm

    ic = _random_ic(rng, 2, 3)
    h = 1e-3

    def s(t):
        u = expm(-1j * ic.V0.data * t)
        rho = u @ ic.rho0.data @ u.conj().T
        ra = np.einsum("ijkj->ik", rho.reshape(2, 3, 2, 3))
        return 1 - np.trace(ra @ ra).real

    fd = (s(h) - 2 * s(0) + s(-h)) / h**2
    assert abs(fd - s2_direct(ic)) < 1e-4 * s2_direct(ic)


def test_td_from_s2_examples():
    assert abs(td_from_s2(28).td - 0.18898) < 5e-6
    r0 = td_from_s2(0.0)
    assert r0.unbounded and r0.commuting and r0.td_label() == "UNBOUNDED"
    assert td_from_s2(4).td == 0.5
    assert td_from_s2(1e-13).unbounded


def test_td_from_s2_rejects_negative():
    with pytest.raises(ConsistencyError):
        td_from_s2(-1.0)
    with pytest.raises(ConsistencyError):
        td_from_s2(math.nan)


@pytest.mark.parametrize(
    "nodes,order,expected",
    [
        ([-1, 0, 1], 2, [1, -2, 1]),
        ([-1, 0, 1], 1, [-0.5, 0, 0.5]),
        ([0, 1, 2], 1, [-1.5, 2, -0.5]),
        ([0, 1, 2, 3], 2, [2, -5, 4, -1]),
    ],
)
def test_fornberg_weights(nodes, order, expected):
    np.testing.assert_allclose(fornberg_weights(nodes, order), expected, atol=1e-13)


def _series(f, h, n):
    t = np.arange(n) * h
    return EntropySeries(t, f(t))


def test_fd_zero_series():
    s = _series(lambda t: 0 * t, 0.01, 30)
    for order in (1, 2, 3, 4):
        assert fd_derivative(s, order).value == 0.0


def test_fd_polynomial_exact():
    s = _series(lambda t: t**2, 0.01, 30)
    assert abs(fd_derivative(s, 2).value - 2.0) < 1e-8
    assert abs(fd_derivative(s, 1).value) < 1e-8


def test_fd_smooth_function_orders():
    f = lambda t: 0.5 * (1 - np.cos(t))  # s1=0, s2=0.5, s3=0, s4=-0.5
    s = _series(f, 0.01, fd_points_needed(4))
    assert abs(fd_derivative(s, 2).value - 0.5) < 1e-6
    assert abs(fd_derivative(s, 4, atol=1e-3).value + 0.5) < 1e-2


def test_fd_coarse_grid_raises():
    s = _series(lambda t: 1 - np.exp(-50 * t**2), 0.1, 20)
    with pytest.raises(PrecisionError, match="refine the grid") as err:
        fd_derivative(s, 2)
    assert err.value.estimate is not None


def test_fd_too_few_points():
    with pytest.raises(UsageError):
        fd_derivative(_series(lambda t: t**2, 0.1, 5), 2)


@pytest.mark.parametrize(
    "times,values",
    [([0.1, 0.2, 0.3], [0, 0, 0]), ([0, 0.1, 0.3], [0, 0, 0]), ([0, 0.1, 0.2], [0.5, 0, 0]), ([0, 0.1, 0.2], [0, 2, 0])],
)
def test_series_validation(times, values):
    with pytest.raises(UsageError):
        EntropySeries(np.array(times), np.array(values))


def test_orthogonal_states_share_s2(rng):
    for _ in range(20):
        theta = rng.uniform(0, math.pi)
        phi = rng.uniform(0, 2 * math.pi)
        a = s2_direct(_pd_ic(theta, phi, ("thermal", 0.8, 30)))
        b = s2_direct(_pd_ic(math.pi - theta, phi + math.pi, ("thermal", 0.8, 30)))
        assert abs(a - b) <= 1e-12 * max(a, 1.0)


def test_s2_pure_dephasing_formula(rng):
    x = ladder_ops(12)["x"]
    boson = make_boson(BosonStateSpec("thermal", 0.4, 12))
    var = (np.trace(boson.rho.data @ x.data @ x.data) - np.trace(boson.rho.data @ x.data) ** 2).real
    for _ in range(5):
        theta = rng.uniform(0, math.pi)
        ic = InitialCondition(make_qubit(QubitStateSpec(theta)), boson.rho, 0.6 * kron(pauli_ops()["sz"], x))
        assert abs(s2_direct(ic) - 4 * 0.36 * var * math.sin(theta) ** 2) < 1e-12


def test_s2_sparse_and_dense_paths_agree(rng, monkeypatch):
    a = ladder_ops(32)
    psi = make_qubit(QubitStateSpec(theta=0.7, phi=0.3))
    rho_R = make_boson(BosonStateSpec("thermal", 0.4, 32)).rho
    V = kron(pauli_ops()["sx"], a["x"]) + kron(pauli_ops()["sz"], a["n"])
    ic = InitialCondition(psi, rho_R, V)
    assert np.count_nonzero(V.data) <= entropy_mod.SPARSE_DENSITY * V.data.size
    sparse_value = s2_direct(ic)
    monkeypatch.setattr(entropy_mod, "SPARSE_DENSITY", 0.0)
    dense_value = s2_direct(ic)
    assert abs(sparse_value - dense_value) <= 1e-12 * dense_value
    assert abs(dense_value - s2_eq3(ic)) <= 1e-12 * dense_value
