import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pbteleport._tensor import P_SINGLET, reduced_density
from pbteleport.protocols import (
    Variant,
    average_fidelity,
    build_protocol,
    det_opt_protocol,
    fidelity_det_mes,
    fidelity_det_opt,
    gamma,
    h_of_n,
    klm_ports_for,
    mes_resource,
    n2_reference,
    nu,
    performance,
    prob_mes_protocol,
    prob_opt_protocol,
    prob_opt_resource,
    probability_prob_mes,
    probability_prob_mes_exact,
    probability_prob_opt,
    resource_for,
    srm_povm,
    swap_ports,
    theta,
    u_of_s,
)
from pbteleport.rho_spectrum import build_sigma, singlet_isometry
from pbteleport.spin_schur import multiplicity, spins

ALL = list(Variant)


def test_variant_strings():
    assert [v.value for v in Variant] == ["det-mes", "det-opt", "prob-mes", "prob-opt"]
    assert Variant("prob-opt").probabilistic and Variant("prob-opt").optimized_state
    assert not Variant("det-mes").probabilistic and not Variant("det-mes").optimized_state
    assert str(Variant.DET_OPT) == "det-opt"


# --------------------------------------------------------------------------
# resources


@pytest.mark.parametrize("variant", ALL)
@pytest.mark.parametrize("n", [1, 2, 3, 10, 57, 200])
def test_resource_trace_normalized(variant, n):
    res = resource_for(variant, n)
    assert res.trace_fraction() == pytest.approx(1.0, abs=1e-12)
    assert all(w >= 0 for w in res.weights().values())


def test_resource_spectra_formulas():
    n = 5
    for tj in spins(n):
        j = tj / 2
        g = multiplicity(n, tj)
        expected = 2 ** (n + 2) / ((n + 2) * (2 * j + 1) * g) * math.sin(math.pi * (2 * j + 1) / (n + 2)) ** 2
        assert gamma(n, tj) == pytest.approx(expected, rel=1e-13)
        assert nu(n, tj) == pytest.approx(2**n * float(h_of_n(n)) * (tj + 1) / g, rel=1e-13)
    assert h_of_n(2) == Fraction(1, 10)
    assert prob_opt_resource(2).weights() == pytest.approx({0: 0.4, 2: 1.2})


@pytest.mark.parametrize("variant", ALL)
@pytest.mark.parametrize("n", range(1, 7))
def test_resource_state_and_port_marginals(variant, n):
    res = resource_for(variant, n)
    psi = res.state()
    assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-12)
    x = res.x_matrix()
    assert np.trace(x) == pytest.approx(2**n)
    o = res.o_matrix()
    assert np.allclose(o @ o, x, atol=1e-12)
    dims = [2] * (2 * n)
    # every B_i is maximally mixed on its own
    for i in range(n):
        assert np.allclose(reduced_density(psi, [n + i], dims), np.eye(2) / 2, atol=1e-12)


# --------------------------------------------------------------------------
# POVMs


@pytest.mark.parametrize("variant", ALL)
@pytest.mark.parametrize("n", range(1, 7))
def test_povm_complete_and_psd(variant, n):
    povm = build_protocol(variant, n).povm
    assert povm.completeness_error() <= 1e-10
    assert povm.min_eigenvalue() >= -1e-12


@pytest.mark.parametrize("variant", ALL)
@pytest.mark.parametrize("n", range(2, 6))
def test_permutation_covariance(variant, n):
    ops = [op for label, op in build_protocol(variant, n).povm.outcomes() if label > 0]
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            assert np.allclose(swap_ports(ops[i - 1], n, i, j), ops[j - 1], atol=1e-12)


def test_srm_single_port_is_identity():
    (label, op), = srm_povm(1).outcomes()
    assert label == 1
    assert np.allclose(op, np.eye(4), atol=1e-12)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_srm_excess_invisible_to_sigma(n):
    povm = srm_povm(n)
    total = sum(povm.elements)
    assert np.allclose(total + povm.excess, np.eye(2 ** (n + 1)), atol=1e-12)
    for i in range(1, n + 1):
        assert abs(np.trace(build_sigma(n, i).matrix @ povm.excess)) < 1e-12


@pytest.mark.parametrize("variant", [Variant.PROB_MES, Variant.PROB_OPT])
@pytest.mark.parametrize("n", range(1, 6))
def test_probabilistic_elements_factor(variant, n):
    povm = build_protocol(variant, n).povm
    for i, op in enumerate(povm.elements, start=1):
        v = singlet_isometry(n, i)
        assert np.allclose(v.T @ op @ v, theta(n, variant, i), atol=1e-12)
        assert np.allclose(op - v @ v.T @ op @ v @ v.T, 0, atol=1e-12)
    # the success part fits under the target
    gap = povm.target - sum(povm.elements)
    assert np.linalg.eigvalsh(gap)[0] >= -1e-12


def test_prob_mes_below_identity():
    povm = build_protocol(Variant.PROB_MES, 4).povm
    assert np.linalg.eigvalsh(sum(povm.elements))[-1] <= 1 + 1e-12


def test_prob_opt_two_port_theta():
    assert np.allclose(theta(2, Variant.PROB_OPT, 1), 0.8 * np.eye(2))
    assert u_of_s(2, 1) == pytest.approx(0.8)


def test_theta_rejects_deterministic():
    with pytest.raises(ValueError):
        theta(3, Variant.DET_MES, 1)
    with pytest.raises(ValueError):
        theta(3, Variant.PROB_OPT, 4)


# --------------------------------------------------------------------------
# closed forms


def _det_mes_reference(n):
    mpmath.mp.dps = 50
    total = mpmath.mpf(0)
    for k in range(n + 1):
        term = (n - 2 * k - 1) / mpmath.sqrt(k + 1) + (n - 2 * k + 1) / mpmath.sqrt(n - k + 1)
        total += term**2 * mpmath.binomial(n, k)
    return total / mpmath.mpf(2) ** (n + 3)


@pytest.mark.parametrize("n", range(1, 31))
def test_fidelity_det_mes_against_high_precision(n):
    assert fidelity_det_mes(n) == pytest.approx(float(_det_mes_reference(n)), rel=1e-14, abs=1e-15)


def test_fidelity_det_mes_examples():
    assert fidelity_det_mes(1) == 0.25
    assert average_fidelity(fidelity_det_mes(1)) == 0.5
    assert fidelity_det_mes(2) == pytest.approx((2 + math.sqrt(3)) / 8, abs=1e-15)
    assert average_fidelity(fidelity_det_mes(2)) < 2 / 3 < average_fidelity(fidelity_det_mes(3))


def test_fidelity_det_mes_asymptote():
    scaled = [n * n * abs(fidelity_det_mes(n) - (1 - 3 / (4 * n))) for n in (100, 300, 1000)]
    assert all(math.isfinite(v) and v < 1 for v in scaled)
    assert scaled[0] <= scaled[1] <= scaled[2]


def test_fidelity_det_mes_large_n_finite():
    f = fidelity_det_mes(20000)
    assert 0 < f < 1
    assert abs(f - (1 - 3 / 80000)) < 1e-8


def test_det_opt_values():
    assert fidelity_det_opt(1) == pytest.approx(0.25, abs=1e-15)
    assert fidelity_det_opt(2) == 0.5
    assert performance(Variant.DET_OPT, 2).metric_average_f == 2 / 3
    assert fidelity_det_opt(4) == 0.75


def test_prob_mes_values():
    assert probability_prob_mes_exact(1) == Fraction(1, 4)
    assert probability_prob_mes_exact(2) == Fraction(1, 3)
    assert probability_prob_mes(10**4) == pytest.approx(1 - math.sqrt(8 / (math.pi * 10**4)), rel=0.02)


def test_prob_mes_matches_factorial_form():
    for n in range(1, 25):
        total = Fraction(0)
        for tj in spins(n - 1) if n > 1 else [0]:
            s2 = tj
            a = (n - 1 - s2) // 2
            b = (n + 3 + s2) // 2
            total += Fraction((s2 + 1) ** 2 * math.factorial(n), math.factorial(a) * math.factorial(b))
        assert probability_prob_mes_exact(n) == total / 2**n


def test_prob_opt_values():
    assert probability_prob_opt(2) == pytest.approx(0.4)
    assert probability_prob_opt(1) == 0.25
    assert klm_ports_for(30) == 10
    # 1 - 1/(N_KLM + 1) with N = 3 N_KLM equals N/(N+3)
    for n in (3, 9, 30):
        assert 1 - 1 / (klm_ports_for(n) + 1) == pytest.approx(probability_prob_opt(n))


def test_monotone_in_n():
    f = [fidelity_det_opt(n) for n in range(1, 65)]
    p = [probability_prob_opt(n) for n in range(1, 65)]
    assert all(a <= b for a, b in zip(f, f[1:]))
    assert all(a <= b for a, b in zip(p, p[1:]))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(ALL), st.integers(1, 400))
def test_metrics_in_unit_interval(variant, n):
    rep = performance(variant, n)
    assert 0 <= rep.metric_closed <= 1
    if rep.metric_average_f is not None:
        assert 0 <= rep.metric_average_f <= 1


def test_report_fields():
    rep = performance("prob-mes", 100)
    assert rep.metric_name == "p"
    assert rep.asymptote_value == pytest.approx(1 - math.sqrt(8 / (math.pi * 100)))
    assert performance("det-mes", 8).asymptote_value == pytest.approx(1 - 3 / 32)


def test_protocol_helpers():
    res, povm, rep = det_opt_protocol(3)
    assert res.n == povm.n == rep.n == 3
    povm, rep = prob_mes_protocol(2)
    assert rep.metric_closed == pytest.approx(1 / 3)
    res, povm, rep = prob_opt_protocol(2)
    assert rep.metric_closed == pytest.approx(0.4)
    assert mes_resource(3).weights() == {1: 1.0, 3: 1.0}
    with pytest.raises(ValueError):
        build_protocol("det-mes", 0)


# --------------------------------------------------------------------------
# explicit two-port protocol


def test_n2_reference_normalized():
    ref = n2_reference()
    assert np.linalg.norm(ref.psi) == pytest.approx(1)
    assert np.linalg.norm(ref.psi_res) == pytest.approx(1)
    assert abs(ref.eta_minus @ ref.eta_plus) < 1e-15


def test_n2_reference_matches_construction():
    ref = n2_reference()
    proto = build_protocol(Variant.PROB_OPT, 2)
    assert abs(abs(proto.resource.state() @ ref.psi) - 1) < 1e-12
    o_inv = np.kron(proto.resource.o_matrix(-0.5), np.eye(2))
    pis = [o_inv @ op @ o_inv for op in proto.povm.elements]
    assert np.allclose(pis[0], ref.pi1, atol=1e-12)
    assert np.allclose(pis[1], ref.pi2, atol=1e-12)


def test_n2_reference_teleports_with_probability_fifth():
    ref = n2_reference()
    a, b = 0.6, 0.8j
    chi = np.array([a, b])
    # psi on A1 A2 B1 B2, chi on C -> reorder to A1 A2 C B1 B2
    full = np.kron(ref.psi, chi).reshape(2, 2, 2, 2, 2).transpose(0, 1, 4, 2, 3).reshape(8, 4)
    post = ref.pi1 @ full  # Pi_1 is a projector, so sqrt(Pi_1) = Pi_1
    expected = np.kron(ref.psi_res.reshape(8, 2), chi.reshape(1, 2)).reshape(8, 2, 2)
    # columns of ``post`` are (B1, B2); expected[r, b2, b1]
    assert np.allclose(post.reshape(8, 2, 2), expected.transpose(0, 2, 1) / math.sqrt(5), atol=1e-12)
    assert np.linalg.norm(post) ** 2 == pytest.approx(0.2)
