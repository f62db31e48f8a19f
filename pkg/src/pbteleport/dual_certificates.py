"""Closed-form dual solutions certifying optimality of the three optimized protocols.

Each certificate builds the dual variables (Omega, a) from the sector projectors
of rho, evaluates every dual constraint by its minimum eigenvalue, and compares
the dual objective to the primal value of the matching dense protocol.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import limits
from ._tensor import min_eigenvalue, partial_trace
from .protocols import (
    Variant,
    build_protocol,
    inverse_y,
    probability_prob_mes,
    transformed_fidelity,
)
from .rho_spectrum import (
    MINUS,
    PLUS,
    build_sigma,
    c_of_s,
    lambda_minus,
    lambda_plus,
    port_spins,
    sector_function,
    singlet_isometry,
)

TOLERANCE = 1e-10


@dataclass
class CertificateReport:
    variant: str  # protocol whose optimality is certified
    n: int
    dual_value: float
    primal_value: float
    constraints: dict[str, float]  # name -> minimum eigenvalue
    equalities: dict[str, float] = field(default_factory=dict)  # name -> max abs residual
    tolerance: float = TOLERANCE

    @property
    def gap(self) -> float:
        return self.dual_value - self.primal_value

    @property
    def min_constraint(self) -> float:
        return min(self.constraints.values())

    @property
    def passed(self) -> bool:
        tol = self.tolerance
        return (
            self.min_constraint >= -tol
            and abs(self.gap) <= tol
            and all(v <= tol for v in self.equalities.values())
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(gap=self.gap, min_constraint=self.min_constraint, passed=self.passed)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _check(n: int) -> None:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    limits.check_spins(n + 1)


def _trace_b(omega: np.ndarray, n: int) -> np.ndarray:
    return partial_trace(omega, list(range(n)), [2] * (n + 1))


def _port_constraints(omega: np.ndarray, n: int) -> tuple[dict, dict]:
    """tr_{A_i B}[P^- Omega] - 1 for each port: min eigenvalue and distance from zero."""
    mins, resid = {}, {}
    eye = np.eye(2 ** (n - 1))
    for i in range(1, n + 1):
        v = singlet_isometry(n, i)
        m = v.T @ omega @ v - eye
        mins[f"port_{i}"] = min_eigenvalue(m)
        resid[f"port_{i}_identity"] = float(np.max(np.abs(m)))
    return mins, resid


def det_opt_omega(n: int) -> np.ndarray:
    """(1/2^(N-1)) sum_s c(s, y(s)) rho(s)^(1/y(s)); the s = 0 term reduces to 1_+(0)."""
    coeffs = {}
    for two_s in port_spins(n):
        if two_s == 0:
            coeffs[(0, PLUS)] = 1.0
            continue
        iy = inverse_y(n, two_s)
        c = c_of_s(n, two_s, 1.0 / iy)
        coeffs[(two_s, MINUS)] = c * float(lambda_minus(n, two_s - 1)) ** iy
        coeffs[(two_s, PLUS)] = c * float(lambda_plus(n, two_s + 1)) ** iy
    return sector_function(n, coeffs) / 2 ** (n - 1)


def det_opt_certificate(n: int, scale: float = 1.0, tol: float = TOLERANCE) -> CertificateReport:
    """Dual of the fidelity SDP: minimize 2^(N-2) a s.t. a1 - tr_B Omega >= 0, Omega - sigma_i >= 0.

    ``scale`` multiplies Omega; values below 1 should break the sigma constraints.
    """
    _check(n)
    a = math.cos(math.pi / (n + 2)) ** 2 / 2 ** (n - 2)
    omega = scale * det_opt_omega(n)
    tb = _trace_b(omega, n)
    gap_mat = a * np.eye(2**n) - tb
    constraints = {"a_minus_trace_b": min_eigenvalue(gap_mat)}
    for i in range(1, n + 1):
        constraints[f"omega_minus_sigma_{i}"] = min_eigenvalue(omega - build_sigma(n, i).matrix)
    primal = transformed_fidelity(build_protocol(Variant.DET_OPT, n).povm)
    return CertificateReport(
        Variant.DET_OPT.value, n, 2 ** (n - 2) * a, primal, constraints,
        {"trace_b_equals_a": float(np.max(np.abs(gap_mat)))}, tol,
    )


def prob_mes_omega(n: int) -> np.ndarray:
    """sum_s (2s+1)/(s+1) 1_+(s)."""
    return sector_function(n, {(t, PLUS): 2 * (t + 1) / (t + 2) for t in port_spins(n)})


def prob_mes_certificate(n: int, tol: float = TOLERANCE) -> CertificateReport:
    """Dual of the success-probability SDP at X = 1: minimize tr Omega / 2^(N+1)."""
    _check(n)
    omega = prob_mes_omega(n)
    constraints = {"omega_psd": min_eigenvalue(omega)}
    mins, resid = _port_constraints(omega, n)
    constraints.update(mins)
    dual = float(np.trace(omega)) / 2 ** (n + 1)
    resid["dual_equals_closed_form"] = abs(dual - probability_prob_mes(n))
    primal = transformed_fidelity(build_protocol(Variant.PROB_MES, n).povm)
    return CertificateReport(Variant.PROB_MES.value, n, dual, primal, constraints, resid, tol)


def prob_opt_omega(n: int) -> np.ndarray:
    """sum_s d(s) 1_+(s) + e(s) 1_-(s), d = (N+3+2s)/(N+3), e = (N+1-2s)/(N+3)."""
    coeffs = {}
    for t in port_spins(n):
        coeffs[(t, PLUS)] = (n + 3 + t) / (n + 3)
        if t > 0:
            coeffs[(t, MINUS)] = (n + 1 - t) / (n + 3)
    return sector_function(n, coeffs)


def prob_opt_certificate(n: int, tol: float = TOLERANCE) -> CertificateReport:
    """Dual with X free: minimize 2^N a with the extra constraint a1 - tr_B Omega / 2^(N+1) >= 0."""
    _check(n)
    a = n / ((n + 3) * 2**n)
    omega = prob_opt_omega(n)
    constraints = {"omega_psd": min_eigenvalue(omega)}
    mins, resid = _port_constraints(omega, n)
    constraints.update(mins)
    tb = _trace_b(omega, n)
    constraints["a_minus_trace_b"] = min_eigenvalue(a * np.eye(2**n) - tb / 2 ** (n + 1))
    resid["trace_b_identity"] = float(np.max(np.abs(tb - 2 * n / (n + 3) * np.eye(2**n))))
    primal = transformed_fidelity(build_protocol(Variant.PROB_OPT, n).povm)
    return CertificateReport(Variant.PROB_OPT.value, n, 2**n * a, primal, constraints, resid, tol)


def all_certificates(n_max: int, tol: float = TOLERANCE) -> list[CertificateReport]:
    out = []
    for n in range(1, n_max + 1):
        out.append(det_opt_certificate(n, tol=tol))
        out.append(prob_mes_certificate(n, tol=tol))
        out.append(prob_opt_certificate(n, tol=tol))
    return out
