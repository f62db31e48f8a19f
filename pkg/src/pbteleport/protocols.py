"""The four optimal port-selection teleportation protocols.

Each protocol is a resource operator X = O^dagger O on Alice's N qubits plus a
set of POVM operators Pi~_i on A (x) B with sum Pi~_i + excess = X (x) 1
(deterministic) or sum P^- (x) Theta~_i + failure = X (x) 1 (probabilistic).
Closed-form performance values are valid for any N; dense objects only up to
the dense limit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Optional

import numpy as np

from . import limits
from ._tensor import SINGLET, min_eigenvalue
from .rho_spectrum import (
    MINUS,
    PLUS,
    build_sigma,
    lambda_minus,
    lambda_plus,
    port_sector_sigma,
    port_spins,
    rho_power,
    sector_function,
    singlet_isometry,
)
from .spin_schur import multiplicity, sector_projector, spins


class Variant(str, enum.Enum):
    DET_MES = "det-mes"
    DET_OPT = "det-opt"
    PROB_MES = "prob-mes"
    PROB_OPT = "prob-opt"

    @property
    def probabilistic(self) -> bool:
        return self in (Variant.PROB_MES, Variant.PROB_OPT)

    @property
    def optimized_state(self) -> bool:
        return self in (Variant.DET_OPT, Variant.PROB_OPT)

    def __str__(self) -> str:
        return self.value


# --------------------------------------------------------------------------
# resource operator X


@dataclass(frozen=True)
class ResourceSpec:
    """Block-diagonal X = sum_j weight(j) 1(j)_A, stored as log2(weight(j) / 2^N).

    weight(j) / 2^N is the eigenvalue of Alice's reduced state on the spin-j block,
    so storing it keeps large-N resources in floating-point range.
    """

    n: int
    log2_fraction: dict[int, float]

    def weight(self, two_j: int) -> float:
        return 2.0 ** (self.log2_fraction[two_j] + self.n)

    def fraction(self, two_j: int) -> float:
        return 2.0 ** self.log2_fraction[two_j]

    def weights(self) -> dict[int, float]:
        return {tj: self.weight(tj) for tj in self.log2_fraction}

    def trace_fraction(self) -> float:
        """tr X / 2^N; equals 1 for a normalized resource."""
        return math.fsum(
            self.fraction(tj) * (tj + 1) * multiplicity(self.n, tj) for tj in self.log2_fraction
        )

    def x_matrix(self) -> np.ndarray:
        limits.check_spins(self.n)
        return sum(self.weight(tj) * sector_projector(self.n, tj) for tj in self.log2_fraction)

    def o_matrix(self, power: float = 0.5) -> np.ndarray:
        """X**power; power=0.5 is the principal square root O, -0.5 its inverse."""
        limits.check_spins(self.n)
        return sum(self.weight(tj) ** power * sector_projector(self.n, tj) for tj in self.log2_fraction)

    def state(self) -> np.ndarray:
        """|psi> = (O (x) 1)|psi^->^(x)N, factors ordered A_1..A_N, B_1..B_N."""
        n = self.n
        limits.check_amplitudes(4**n)
        t = np.ones(1)
        for _ in range(n):
            t = np.kron(t, SINGLET)
        # pair order A1 B1 A2 B2 ... -> A1..AN B1..BN
        t = t.reshape([2] * (2 * n))
        t = t.transpose(list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2)))
        mat = t.reshape(2**n, 2**n)
        return (self.o_matrix() @ mat).reshape(-1)


def mes_resource(n: int) -> ResourceSpec:
    return ResourceSpec(n, {tj: -float(n) for tj in spins(n)})


def gamma(n: int, two_j: int) -> float:
    """Optimal deterministic X eigenvalue on the spin-j block."""
    return 2.0 ** (_log2_gamma_fraction(n, two_j) + n)


def _log2_gamma_fraction(n: int, two_j: int) -> float:
    s2 = math.sin(math.pi * (two_j + 1) / (n + 2)) ** 2
    return math.log2(4 * s2 / ((n + 2) * (two_j + 1))) - math.log2(multiplicity(n, two_j))


def det_opt_resource(n: int) -> ResourceSpec:
    return ResourceSpec(n, {tj: _log2_gamma_fraction(n, tj) for tj in spins(n)})


def h_of_n(n: int) -> Fraction:
    return Fraction(6, (n + 1) * (n + 2) * (n + 3))


def nu(n: int, two_j: int) -> float:
    """Optimal probabilistic X eigenvalue on the spin-j block."""
    return 2.0 ** (_log2_nu_fraction(n, two_j) + n)


def _log2_nu_fraction(n: int, two_j: int) -> float:
    return math.log2(float(h_of_n(n)) * (two_j + 1)) - math.log2(multiplicity(n, two_j))


def prob_opt_resource(n: int) -> ResourceSpec:
    return ResourceSpec(n, {tj: _log2_nu_fraction(n, tj) for tj in spins(n)})


def resource_for(variant: Variant, n: int) -> ResourceSpec:
    variant = Variant(variant)
    if variant is Variant.DET_OPT:
        return det_opt_resource(n)
    if variant is Variant.PROB_OPT:
        return prob_opt_resource(n)
    return mes_resource(n)


# --------------------------------------------------------------------------
# POVMs


@dataclass
class PovmSet:
    """POVM in the transformed picture Pi~_i = (O^dagger (x) 1) Pi_i (O (x) 1) on A (x) B.

    Deterministic: outcome i is ``elements[i-1] + excess / N``.
    Probabilistic: outcome i >= 1 is ``elements[i-1]``, outcome 0 (failure) is ``excess``.
    """

    variant: Variant
    n: int
    elements: list[np.ndarray] = field(repr=False)
    excess: np.ndarray = field(repr=False)
    target: np.ndarray = field(repr=False)
    thetas: Optional[list[np.ndarray]] = field(default=None, repr=False)

    @property
    def probabilistic(self) -> bool:
        return self.variant.probabilistic

    def outcomes(self) -> list[tuple[int, np.ndarray]]:
        if self.probabilistic:
            return [(0, self.excess)] + [(i + 1, e) for i, e in enumerate(self.elements)]
        share = self.excess / self.n
        return [(i + 1, e + share) for i, e in enumerate(self.elements)]

    def completeness_error(self) -> float:
        total = sum(op for _, op in self.outcomes())
        return float(np.max(np.abs(total - self.target)))

    def min_eigenvalue(self) -> float:
        return min(min_eigenvalue(op) for _, op in self.outcomes())


def _check_dense(n: int) -> None:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    limits.check_spins(n + 1)


def srm_povm(n: int) -> PovmSet:
    """Square-root measurement rho^(-1/2) sigma_i rho^(-1/2) with the excess to identity."""
    _check_dense(n)
    r = rho_power(n, -0.5)
    elems = [r @ build_sigma(n, i).matrix @ r for i in range(1, n + 1)]
    target = np.eye(2 ** (n + 1))
    return PovmSet(Variant.DET_MES, n, elems, target - sum(elems), target)


def d_of_s(n: int, two_s: int) -> float:
    """sin(2 pi (s+1)/(N+2)) / sin(2 pi s/(N+2))."""
    return math.sin(math.pi * (two_s + 2) / (n + 2)) / math.sin(math.pi * two_s / (n + 2))


def inverse_y(n: int, two_s: int) -> float:
    """1/y(s) solving (lambda^-_{s-1/2} / lambda^+_{s+1/2})^(1/y) (s+1)/s = D(s); s > 0."""
    if two_s <= 0:
        raise ValueError("y(s) is defined for s > 0 only")
    ratio = float(lambda_minus(n, two_s - 1) / lambda_plus(n, two_s + 1))
    return math.log(d_of_s(n, two_s) * two_s / (two_s + 2)) / math.log(ratio)


def z_of_s(n: int, two_s: int) -> float:
    """Sector weight of the generalized SRM; s > 0."""
    lam = float(lambda_minus(n, two_s - 1))
    iy = inverse_y(n, two_s)
    s = two_s / 2
    return (
        2.0 ** (n + 1)
        * lam ** (2 * iy - 1)
        * math.sin(math.pi * two_s / (n + 2)) ** 2
        / ((n + 2) * s * multiplicity(n, two_s - 1))
    )


def generalized_srm_weights(n: int) -> dict[tuple[int, str], float]:
    """Branch coefficients of M(s) with Pi~_i(s) = M(s) sigma_i(s) M(s).

    For s > 0, M(s) = sqrt(z(s)) rho(s)^(-1/y(s)). The s = 0 block has only the
    plus branch, where the product z(0) lambda^(-2/y(0)) is fixed by requiring the
    block to sum to gamma(1/2) 1_+(0).
    """
    out = {}
    for two_s in port_spins(n):
        if two_s == 0:
            out[(0, PLUS)] = math.sqrt(gamma(n, 1) / float(lambda_plus(n, 1)))
            continue
        iy = inverse_y(n, two_s)
        rz = math.sqrt(z_of_s(n, two_s))
        out[(two_s, MINUS)] = rz * float(lambda_minus(n, two_s - 1)) ** (-iy)
        out[(two_s, PLUS)] = rz * float(lambda_plus(n, two_s + 1)) ** (-iy)
    return out


def det_opt_povm(n: int, resource: ResourceSpec | None = None) -> PovmSet:
    _check_dense(n)
    resource = resource or det_opt_resource(n)
    weights = generalized_srm_weights(n)
    elems = []
    for i in range(1, n + 1):
        el = np.zeros((2 ** (n + 1),) * 2)
        for two_s in port_spins(n):
            m = sector_function(n, {k: v for k, v in weights.items() if k[0] == two_s})
            el += m @ port_sector_sigma(n, i, two_s) @ m
        elems.append(el)
    target = np.kron(resource.x_matrix(), np.eye(2))
    return PovmSet(Variant.DET_OPT, n, elems, target - sum(elems), target)


def u_of_s(n: int, two_s: int) -> float:
    """Theta~ weight on the spin-s block of A-bar_i for the optimal probabilistic protocol."""
    return 2.0 ** (n + 1) * float(h_of_n(n)) * (two_s + 1) / (n * multiplicity(n - 1, two_s))


def theta(n: int, variant: Variant, i: int) -> np.ndarray:
    """Theta~_i on the N-1 qubits A-bar_i (basis of A-bar_i in increasing qubit order)."""
    variant = Variant(variant)
    if not 1 <= i <= n:
        raise ValueError(f"port index {i} outside 1..{n}")
    dim = 2 ** (n - 1)
    out = np.zeros((dim, dim))
    for two_s in port_spins(n):
        if variant is Variant.PROB_MES:
            c = 1.0 / (2 ** (n - 1) * float(lambda_plus(n, two_s + 1)))
        elif variant is Variant.PROB_OPT:
            c = u_of_s(n, two_s)
        else:
            raise ValueError(f"{variant} is not probabilistic")
        out += c * sector_projector(n - 1, two_s)
    return out


def prob_element(n: int, variant: Variant, i: int) -> np.ndarray:
    """P^-_{A_i B} (x) Theta~_i on A (x) B."""
    limits.check_spins(n + 1)
    v = singlet_isometry(n, i)
    return v @ theta(n, variant, i) @ v.T


def prob_povm(n: int, variant: Variant) -> PovmSet:
    _check_dense(n)
    variant = Variant(variant)
    resource = resource_for(variant, n)
    thetas = [theta(n, variant, i) for i in range(1, n + 1)]
    elems = [prob_element(n, variant, i) for i in range(1, n + 1)]
    target = np.kron(resource.x_matrix(), np.eye(2))
    return PovmSet(variant, n, elems, target - sum(elems), target, thetas)


# --------------------------------------------------------------------------
# closed-form performance


def fidelity_det_mes(n: int) -> float:
    """Entanglement fidelity of the SRM with maximally entangled resource.

    Binomial weights C(N,k)/2^N come from a log-domain multiplicative recurrence,
    and the squared bracket is expanded so that rational parts stay exact.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    logw = [0.0]
    for k in range(n):
        logw.append(logw[-1] + math.log((n - k) / (k + 1)))
    top = max(logw)
    norm = math.fsum(math.exp(v - top) for v in logw)
    terms = []
    for k in range(n + 1):
        a = n - 2 * k - 1
        b = n - 2 * k + 1
        sq = a * a / (k + 1) + b * b / (n - k + 1)
        if a and b:
            sq += 2 * a * b / math.sqrt((k + 1) * (n - k + 1))
        terms.append(sq * math.exp(logw[k] - top))
    return math.fsum(terms) / norm / 8


def fidelity_det_opt(n: int) -> float:
    """cos^2(pi/(N+2)), written with the double angle so that N = 2, 4 come out exact."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return (1 + math.cos(2 * math.pi / (n + 2))) / 2


def average_fidelity(entanglement_fidelity: float) -> float:
    return (2 * entanglement_fidelity + 1) / 3


def probability_prob_mes_exact(n: int) -> Fraction:
    """Exact rational success probability with maximally entangled resource.

    Uses N!/(a! b!) = C(N+1, a)/(N+1) with a = (N-1)/2 - s, a + b = N + 1.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    num = 0
    binom = 1  # C(N+1, a), updated exactly as a grows
    for a in range((n - 1) // 2 + 1):
        if a:
            binom = binom * (n + 2 - a) // a
        two_s = n - 1 - 2 * a
        num += (two_s + 1) ** 2 * binom
    return Fraction(num, (n + 1) * 2**n)


def probability_prob_mes(n: int) -> float:
    return float(probability_prob_mes_exact(n))


def probability_prob_opt(n: int) -> float:
    return n / (n + 3)


def klm_ports_for(n: int) -> float:
    """KLM port count with the same success probability 1 - 1/(N_KLM + 1) as N/(N+3)."""
    return n / 3


@dataclass(frozen=True)
class PerformanceReport:
    variant: Variant
    n: int
    metric_closed: float  # F (deterministic) or p (probabilistic)
    metric_average_f: Optional[float]
    asymptote_value: Optional[float]

    @property
    def metric_name(self) -> str:
        return "p" if self.variant.probabilistic else "F"


def performance(variant: Variant, n: int) -> PerformanceReport:
    variant = Variant(variant)
    if variant is Variant.DET_MES:
        f = fidelity_det_mes(n)
        return PerformanceReport(variant, n, f, average_fidelity(f), 1 - 3 / (4 * n))
    if variant is Variant.DET_OPT:
        f = fidelity_det_opt(n)
        return PerformanceReport(variant, n, f, average_fidelity(f), None)
    if variant is Variant.PROB_MES:
        return PerformanceReport(variant, n, probability_prob_mes(n), None, 1 - math.sqrt(8 / (math.pi * n)))
    return PerformanceReport(variant, n, probability_prob_opt(n), None, None)


# --------------------------------------------------------------------------
# assembled protocols


@dataclass
class Protocol:
    variant: Variant
    n: int
    resource: ResourceSpec
    report: PerformanceReport

    @cached_property
    def povm(self) -> PovmSet:
        if self.variant is Variant.DET_MES:
            return srm_povm(self.n)
        if self.variant is Variant.DET_OPT:
            return det_opt_povm(self.n, self.resource)
        return prob_povm(self.n, self.variant)


def build_protocol(variant: Variant, n: int) -> Protocol:
    """Resource and report are closed form; the POVM is materialized on first access."""
    variant = Variant(variant)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return Protocol(variant, n, resource_for(variant, n), performance(variant, n))


def det_opt_protocol(n: int) -> tuple[ResourceSpec, PovmSet, PerformanceReport]:
    p = build_protocol(Variant.DET_OPT, n)
    return p.resource, p.povm, p.report


def prob_mes_protocol(n: int) -> tuple[PovmSet, PerformanceReport]:
    p = build_protocol(Variant.PROB_MES, n)
    return p.povm, p.report


def prob_opt_protocol(n: int) -> tuple[ResourceSpec, PovmSet, PerformanceReport]:
    p = build_protocol(Variant.PROB_OPT, n)
    return p.resource, p.povm, p.report


def transformed_fidelity(povm: PovmSet) -> float:
    """(1/4) sum_i tr Pi~_i sigma_i, the fidelity functional in the transformed picture."""
    ops = [op for label, op in povm.outcomes() if label > 0]
    return sum(float(np.trace(op @ build_sigma(povm.n, i + 1).matrix)) for i, op in enumerate(ops)) / 4


# --------------------------------------------------------------------------
# explicit N = 2 probabilistic protocol


@dataclass(frozen=True)
class N2Reference:
    psi: np.ndarray  # A1 A2 B1 B2
    pi1: np.ndarray  # on A1 A2 C
    pi2: np.ndarray
    eta_minus: np.ndarray
    eta_plus: np.ndarray
    psi_res: np.ndarray  # A1 A2 C B2


def n2_reference() -> N2Reference:
    k = np.eye(4)
    e00, e01, e10, e11 = k
    psi_p = (e01 + e10) / math.sqrt(2)
    psi_m = (e01 - e10) / math.sqrt(2)
    zero, one = np.eye(2)

    def tail(w):
        return np.kron(e00, e11) + np.kron(e11, e00) - np.kron(psi_p, psi_p) + w

    psi = math.sqrt(3 / 10) * tail(0) + math.sqrt(1 / 10) * np.kron(psi_m, psi_m)

    def build_pi(sign_sqrt3):
        x_m = 0.5 * (-psi_p + sign_sqrt3 * math.sqrt(3) * psi_m)
        x_p = 0.5 * (psi_p + sign_sqrt3 * math.sqrt(3) * psi_m)
        eta_m = math.sqrt(2 / 3) * np.kron(x_m, zero) + math.sqrt(1 / 3) * np.kron(e00, one)
        eta_p = math.sqrt(2 / 3) * np.kron(x_p, one) - math.sqrt(1 / 3) * np.kron(e11, zero)
        return eta_m, eta_p, np.outer(eta_m, eta_m) + np.outer(eta_p, eta_p)

    eta_m, eta_p, pi1 = build_pi(+1)
    _, _, pi2 = build_pi(-1)
    psi_res = math.sqrt(1 / 2) * np.kron(psi_m, psi_m) + math.sqrt(1 / 6) * tail(0)
    return N2Reference(psi, pi1, pi2, eta_m, eta_p, psi_res)


def swap_ports(op: np.ndarray, n: int, i: int, j: int, extra: int = 1) -> np.ndarray:
    """Conjugate an operator on A_1..A_N (+ ``extra`` trailing qubits) by the A_i <-> A_j swap."""
    dims = [2] * (n + extra)
    perm = list(range(n + extra))
    perm[i - 1], perm[j - 1] = perm[j - 1], perm[i - 1]
    t = op.reshape(dims + dims)
    full = perm + [len(dims) + p for p in perm]
    d = 2 ** (n + extra)
    return t.transpose(full).reshape(d, d)

