import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_density, random_hermitian
from decoq.errors import CapacityError, UsageError, ValidationError
from decoq.linalg import (
    QOperator,
    SpaceLayout,
    UnitaryPropagator,
    commutator,
    dim_cap,
    embed,
    evolve_unitary,
    expectation,
    identity,
    kron,
    local_product,
    partial_trace,
    trace_of_product,
)


def test_layout_total_and_select():
    lay = SpaceLayout((2, 3, 4))
    assert lay.total == 24
    assert lay.select([0, 2]).dims == (2, 4)
    assert lay.concat(SpaceLayout((5,))).dims == (2, 3, 4, 5)


@pytest.mark.parametrize("dims", [(), (0,), (2, -1)])
def test_layout_rejects_bad_dims(dims):
    with pytest.raises(UsageError):
        SpaceLayout(dims)


def test_dim_cap_from_env(monkeypatch):
    monkeypatch.setenv("DECOQ_DIM_CAP", "10")
    assert dim_cap() == 10
    with pytest.raises(CapacityError):
        SpaceLayout((4, 4))


def test_default_cap_blocks_large_layout(monkeypatch):
    monkeypatch.delenv("DECOQ_DIM_CAP", raising=False)
    assert dim_cap() == 4096
    SpaceLayout((64, 64))
    with pytest.raises(CapacityError):
        SpaceLayout((65, 64))


def test_operator_is_read_only():
    op = QOperator(np.eye(2))
    with pytest.raises(ValueError):
        op.data[0, 0] = 3


def test_operator_shape_mismatch():
    with pytest.raises(UsageError):
        QOperator(np.eye(3), (2,))


def test_hermitian_check(rng):
    h = QOperator(random_hermitian(rng, 4))
    assert h.is_hermitian()
    assert not QOperator(np.array([[0, 1], [0, 0]])).is_hermitian()


def test_density_check_rejects_bad_trace():
    with pytest.raises(ValidationError):
        QOperator(np.diag([0.6, 0.6])).check_density()
    with pytest.raises(ValidationError):
        QOperator(np.diag([1.2, -0.2])).check_density()


def test_kron_matches_numpy(rng):
    a, b = random_hermitian(rng, 2), random_hermitian(rng, 3)
    k = kron(QOperator(a), QOperator(b))
    assert k.dims == (2, 3)
    np.testing.assert_allclose(k.data, np.kron(a, b))


def test_embed_places_operator(rng):
    lay = SpaceLayout((2, 3, 2))
    a = random_hermitian(rng, 3)
    e = embed(QOperator(a), 1, lay)
    np.testing.assert_allclose(e.data, np.kron(np.kron(np.eye(2), a), np.eye(2)))


def test_local_product_matches_embedded_product(rng):
    lay = SpaceLayout((2, 3, 2, 4))
    a, b = random_hermitian(rng, 2), random_hermitian(rng, 4)
    p = local_product({0: QOperator(a), 3: QOperator(b)}, lay)
    np.testing.assert_allclose(p.data, (embed(QOperator(a), 0, lay) @ embed(QOperator(b), 3, lay)).data, atol=1e-13)
    assert p.layout == lay


def test_local_product_checks_factors():
    lay = SpaceLayout((2, 3))
    with pytest.raises(UsageError):
        local_product({2: identity((2,))}, lay)
    with pytest.raises(UsageError):
        local_product({1: identity((2,))}, lay)


def test_partial_trace_of_product_state(rng):
    ra, rb = random_density(rng, 2), random_density(rng, 3)
    rho = kron(QOperator(ra), QOperator(rb))
    np.testing.assert_allclose(partial_trace(rho, 0).data, ra, atol=1e-14)
    np.testing.assert_allclose(partial_trace(rho, [1]).data, rb, atol=1e-14)


def test_partial_trace_three_factors(rng):
    rs = [random_density(rng, d) for d in (2, 3, 2)]
    rho = kron(*[QOperator(r) for r in rs])
    np.testing.assert_allclose(partial_trace(rho, [0, 2]).data, np.kron(rs[0], rs[2]), atol=1e-14)
    np.testing.assert_allclose(partial_trace(rho, [1]).data, rs[1], atol=1e-14)


@pytest.mark.parametrize("keep", [[], [3], [-1]])
def test_partial_trace_bad_keep(keep):
    with pytest.raises(UsageError):
        partial_trace(identity((2, 2)), keep)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**31))
def test_partial_trace_preserves_trace(da, db, seed):
    rng = np.random.default_rng(seed)
    rho = QOperator(random_density(rng, da * db), (da, db))
    red = partial_trace(rho, 0)
    assert abs(red.trace() - 1) < 1e-12
    assert red.is_hermitian()


def test_commutator_and_trace_product(rng):
    a, b = QOperator(random_hermitian(rng, 3)), QOperator(random_hermitian(rng, 3))
    np.testing.assert_allclose(commutator(a, b).data, a.data @ b.data - b.data @ a.data)
    assert abs(trace_of_product(a, b) - np.trace(a.data @ b.data)) < 1e-12
    assert abs(expectation(a, identity((3,)) / 3) - np.trace(a.data) / 3) < 1e-12


def test_propagator_matches_expm(rng):
    from scipy.linalg import expm

    h = random_hermitian(rng, 5)
    u = UnitaryPropagator(QOperator(h)).unitary(0.7)
    np.testing.assert_allclose(u.data, expm(-0.7j * h), atol=1e-12)


def test_unitary_evolution_keeps_purity(rng):
    h = QOperator(random_hermitian(rng, 6))
    rho = QOperator(random_density(rng, 6, rank=2))
    out = evolve_unitary(rho, h, 3.1)
    assert abs(trace_of_product(out, out) - trace_of_product(rho, rho)) < 1e-12
