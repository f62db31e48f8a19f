"""Entanglement of the resource state and of the state left behind after a successful run.

All entropies are in ebits (log base 2). The residual state of a successful
probabilistic run lives on A, C and the unused ports B-bar_i; its entropy is
taken across the A C : B-bar_i cut.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from . import limits
from ._tensor import entropy_bits, psd_sqrt
from .protocols import (
    ResourceSpec,
    Variant,
    performance,
    prob_element,
    resource_for,
)
from .rho_spectrum import log_multiplicity
from .spin_schur import spins


@dataclass(frozen=True)
class EntanglementReport:
    n: int
    variant: Variant
    e_ini: float
    e_res: Optional[float]  # None beyond the residual dense limit
    p: float

    @property
    def average_residual(self) -> Optional[float]:
        # failed runs are counted as leaving no entanglement
        return None if self.e_res is None else self.p * self.e_res

    @property
    def consumption(self) -> Optional[float]:
        return None if self.e_res is None else self.e_ini - self.e_res

    @property
    def average_consumption(self) -> Optional[float]:
        return None if self.e_res is None else self.e_ini - self.p * self.e_res

    def row(self) -> dict:
        return {
            "N": self.n,
            "E_ini": self.e_ini,
            "E_res": self.e_res,
            "p": self.p,
            "pE_res": self.average_residual,
            "consumption": self.consumption,
            "avg_consumption": self.average_consumption,
        }


ROW_FIELDS = ("N", "E_ini", "E_res", "p", "pE_res", "consumption", "avg_consumption")


def initial_entanglement(resource: ResourceSpec) -> float:
    """-sum_j (2j+1) g(j) q_j log2 q_j with q_j = weight(j) / 2^N; works for any N."""
    terms = []
    for two_j in spins(resource.n):
        l2q = resource.log2_fraction[two_j]
        if not math.isfinite(l2q):
            continue
        ln_count = math.log(two_j + 1) + log_multiplicity(resource.n, two_j)
        terms.append(-l2q * math.exp(ln_count + l2q * math.log(2)))
    return math.fsum(terms)


def entropy_svd(amplitudes: np.ndarray) -> float:
    """Entropy of a pure state given as a (left x right) amplitude matrix, via singular values."""
    sv = np.linalg.svd(amplitudes, compute_uv=False)
    probs = sv**2
    return entropy_bits(probs / probs.sum())


def entropy_eig(amplitudes: np.ndarray) -> float:
    """Same entropy from the eigenvalues of the smaller reduced density matrix."""
    m = amplitudes
    red = m.conj().T @ m if m.shape[0] >= m.shape[1] else m @ m.conj().T
    w = np.clip(np.linalg.eigvalsh(red), 0.0, None)
    return entropy_bits(w / w.sum())


def _check_residual(n: int, variant: Variant) -> None:
    if not variant.probabilistic:
        raise ValueError(f"residual entanglement is defined for probabilistic variants, not {variant}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n > limits.RESIDUAL_LIMIT:
        raise limits.CapacityError("residual entanglement ports", n, limits.RESIDUAL_LIMIT)


def success_kraus(n: int, variant: Variant, port: int = 1) -> np.ndarray:
    """sqrt(Pi_i) on A (x) C for one success outcome, without building the other elements."""
    resource = resource_for(variant, n)
    o_inv = np.kron(resource.o_matrix(-0.5), np.eye(2))
    return psd_sqrt(o_inv @ prob_element(n, variant, port) @ o_inv)


def _port_front(psi: np.ndarray, n: int, port: int) -> np.ndarray:
    """Resource amplitudes as [a, b_port, b-bar]."""
    t = psi.reshape([2**n] + [2] * n)
    t = np.moveaxis(t, port, 1)
    return t.reshape(2**n, 2, 2 ** (n - 1))


@dataclass(frozen=True)
class ResidualState:
    amplitudes: np.ndarray  # normalized, rows (A, C), cols B-bar_i
    branch_probability: float  # probability of this outcome
    teleport_fidelity: float  # weight of the factorized part; 1 for a faithful branch


def residual_state(n: int, variant: Variant | str = Variant.PROB_OPT, port: int = 1) -> ResidualState:
    """Residual after teleporting half of P^-_{CD} through outcome ``port``.

    Projecting (B_port, D) onto the singlet is the same as feeding C with
    B_port's partner amplitude, so the D qubit never has to be stored.
    """
    variant = Variant(variant)
    _check_residual(n, variant)
    k = success_kraus(n, variant, port)
    t = _port_front(resource_for(variant, n).state(), n, port)
    # W_c[(a', c'), b_port, b-bar] = sum_a K[(a', c'), (a, c)] psi[a, b_port, b-bar]
    w = [np.einsum("ra,abx->rbx", k[:, c::2], t) for c in range(2)]
    norm2 = 0.5 * sum(float(np.sum(np.abs(wc) ** 2)) for wc in w)
    res = 0.5 * (w[0][:, 0, :] + w[1][:, 1, :])
    proj2 = float(np.sum(np.abs(res) ** 2))
    return ResidualState(res / math.sqrt(proj2), norm2, proj2 / norm2)


def residual_from_input(
    n: int, chi: np.ndarray, variant: Variant | str = Variant.PROB_OPT, port: int = 1
) -> ResidualState:
    """Residual after teleporting the pure qubit ``chi``; B_port is projected onto chi."""
    variant = Variant(variant)
    _check_residual(n, variant)
    chi = np.asarray(chi, dtype=complex)
    chi = chi / np.linalg.norm(chi)
    k = success_kraus(n, variant, port)
    t = _port_front(resource_for(variant, n).state(), n, port)
    # post[(a', c'), b_port, b-bar] = sum_{a,c} K[(a',c'),(a,c)] chi[c] psi[a, b_port, b-bar]
    kc = k[:, 0::2] * chi[0] + k[:, 1::2] * chi[1]
    post = np.einsum("ra,abx->rbx", kc, t)
    norm2 = float(np.sum(np.abs(post) ** 2))
    res = np.einsum("b,rbx->rx", chi.conj(), post)
    proj2 = float(np.sum(np.abs(res) ** 2))
    return ResidualState(res / math.sqrt(proj2), norm2, proj2 / norm2)


def residual_entanglement(n: int, variant: Variant | str = Variant.PROB_OPT) -> EntanglementReport:
    variant = Variant(variant)
    _check_residual(n, variant)
    return _residual_entanglement(n, variant)


@lru_cache(maxsize=None)
def _residual_entanglement(n: int, variant: Variant) -> EntanglementReport:
    state = residual_state(n, variant)
    return EntanglementReport(
        n, variant, initial_entanglement(resource_for(variant, n)),
        entropy_svd(state.amplitudes), performance(variant, n).metric_closed,
    )


def consumption_sweep(n_max: int, variant: Variant | str = Variant.PROB_OPT, n_min: int = 1) -> list[EntanglementReport]:
    """One report per N; residual columns are None beyond the residual limit."""
    variant = Variant(variant)
    out = []
    for n in range(n_min, n_max + 1):
        if n <= limits.RESIDUAL_LIMIT:
            out.append(residual_entanglement(n, variant))
        else:
            out.append(
                EntanglementReport(
                    n, variant, initial_entanglement(resource_for(variant, n)), None,
                    performance(variant, n).metric_closed,
                )
            )
    return out
