import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pbteleport.channel_oracle import haar_inputs
from pbteleport.entanglement_accounting import (
    ROW_FIELDS,
    consumption_sweep,
    entropy_eig,
    entropy_svd,
    initial_entanglement,
    residual_entanglement,
    residual_from_input,
    residual_state,
)
from pbteleport.limits import CapacityError
from pbteleport.protocols import Variant, mes_resource, n2_reference, prob_opt_resource, resource_for


def _dense_initial(resource):
    psi = resource.state().reshape(2**resource.n, 2**resource.n)
    return entropy_svd(psi)


@pytest.mark.parametrize("variant", list(Variant))
@pytest.mark.parametrize("n", range(1, 6))
def test_initial_entanglement_matches_dense(variant, n):
    res = resource_for(variant, n)
    assert initial_entanglement(res) == pytest.approx(_dense_initial(res), abs=1e-10)


def test_initial_entanglement_examples():
    assert initial_entanglement(mes_resource(7)) == pytest.approx(7, abs=1e-12)
    assert initial_entanglement(prob_opt_resource(2)) == pytest.approx(1.895462, abs=1e-6)
    e50 = initial_entanglement(prob_opt_resource(50))
    assert math.isfinite(e50) and 0 < e50 < 50


def test_two_port_residual():
    rep = residual_entanglement(2)
    assert rep.e_res == pytest.approx(1.0, abs=1e-9)
    assert rep.consumption == pytest.approx(0.90, abs=0.005)
    assert rep.p == pytest.approx(0.4)
    assert rep.average_consumption == pytest.approx(rep.e_ini - 0.4 * rep.e_res)


def test_two_port_residual_matches_explicit_state():
    state = residual_state(2, Variant.PROB_OPT, port=1)
    ref = n2_reference().psi_res.reshape(8, 2)
    overlap = abs(np.vdot(ref, state.amplitudes))
    assert overlap >= 1 - 1e-10
    assert state.branch_probability == pytest.approx(0.2, abs=1e-12)
    assert state.teleport_fidelity == pytest.approx(1.0, abs=1e-12)


def test_ten_port_average_consumption():
    rep = residual_entanglement(10)
    assert rep.average_consumption == pytest.approx(2.2, abs=0.05)


def test_mes_consumes_at_least_one_ebit():
    reps = consumption_sweep(10, Variant.PROB_MES, n_min=2)
    assert all(r.consumption >= 1 - 1e-9 for r in reps)
    assert reps[-1].consumption == pytest.approx(1.009, abs=0.005)


def test_optimized_state_consumes_less_than_one_ebit():
    reps = consumption_sweep(10, Variant.PROB_OPT, n_min=2)
    cons = [r.consumption for r in reps]
    assert all(c < 1 for c in cons)
    assert all(a > b for a, b in zip(cons, cons[1:]))


@pytest.mark.parametrize("n", range(2, 8))
def test_residual_equals_previous_resource(n):
    # the leftover state carries exactly the entanglement of an (N-1)-port resource
    assert residual_entanglement(n).e_res == pytest.approx(initial_entanglement(prob_opt_resource(n - 1)), abs=1e-9)


@pytest.mark.parametrize("variant", [Variant.PROB_MES, Variant.PROB_OPT])
@pytest.mark.parametrize("n", range(2, 5))
def test_residual_independent_of_port(variant, n):
    first = residual_state(n, variant, 1)
    for port in range(2, n + 1):
        other = residual_state(n, variant, port)
        assert entropy_svd(other.amplitudes) == pytest.approx(entropy_svd(first.amplitudes), abs=1e-10)
        assert other.branch_probability == pytest.approx(first.branch_probability, abs=1e-12)


def test_residual_independent_of_input():
    base = residual_state(2, Variant.PROB_OPT)
    for chi in haar_inputs(20, 9):
        r = residual_from_input(2, chi, Variant.PROB_OPT)
        assert r.teleport_fidelity == pytest.approx(1.0, abs=1e-10)
        assert r.branch_probability == pytest.approx(0.2, abs=1e-10)
        assert abs(np.vdot(base.amplitudes, r.amplitudes)) == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_entropy_methods_agree(r, c, seed):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((2**r, 2**c)) + 1j * rng.standard_normal((2**r, 2**c))
    m /= np.linalg.norm(m)
    assert entropy_svd(m) == pytest.approx(entropy_eig(m), abs=1e-10)
    assert 0 <= entropy_svd(m) <= min(r, c) + 1e-12


def test_product_state_has_zero_entropy():
    assert entropy_svd(np.outer([1, 0], [0, 1])) == 0.0


def test_residual_limits():
    with pytest.raises(CapacityError, match="limit is 10"):
        residual_entanglement(11)
    with pytest.raises(ValueError):
        residual_entanglement(3, Variant.DET_OPT)


def test_sweep_marks_unavailable_residuals():
    reps = consumption_sweep(12, Variant.PROB_OPT, n_min=9)
    assert [r.n for r in reps] == [9, 10, 11, 12]
    assert reps[1].e_res is not None
    assert reps[2].e_res is None and reps[2].consumption is None
    assert math.isfinite(reps[3].e_ini)
    assert tuple(reps[0].row()) == ROW_FIELDS
