"""The port operators sigma_i, their sum rho, and rho's closed-form spectrum.

Qubit order is A_1, ..., A_N, B (B last). Sector labels ``two_s`` refer to the
total spin of the N+1 spins; the A-side spin of a branch is j = s -+ 1/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import limits
from ._tensor import P_SINGLET, SINGLET, embed, embed_vectors
from .spin_schur import cg, multiplicity, schur_basis, sector_projector, spins

# Branch tags: MINUS holds eigenvalue lambda^-_{s-1/2}, PLUS holds lambda^+_{s+1/2}.
MINUS = "-"
PLUS = "+"


def lambda_minus(n: int, two_j: int) -> Fraction:
    """(N/2 - j) / 2^N."""
    return Fraction(n - two_j, 2 ** (n + 1))


def lambda_plus(n: int, two_j: int) -> Fraction:
    """(N/2 + j + 1) / 2^N."""
    return Fraction(n + two_j + 2, 2 ** (n + 1))


def sector_spins(n: int) -> list[int]:
    """Total spins 2s of the N+1 spins A,B."""
    return spins(n + 1)


def port_spins(n: int) -> list[int]:
    """Spins 2s of the N-1 spins A-bar_i (the sectors that carry sigma_i)."""
    return spins(n - 1) if n > 1 else [0]


@dataclass(frozen=True)
class SectorRecord:
    two_s: int
    lambda_minus: Fraction
    lambda_plus: Fraction
    deg_minus: int
    deg_plus: int


@dataclass(frozen=True)
class RhoSpectrum:
    n: int
    sectors: tuple[SectorRecord, ...]

    def multiset(self) -> list[tuple[Fraction, int]]:
        """(eigenvalue, degeneracy) pairs with nonzero degeneracy."""
        out = []
        for r in self.sectors:
            if r.deg_minus:
                out.append((r.lambda_minus, r.deg_minus))
            if r.deg_plus:
                out.append((r.lambda_plus, r.deg_plus))
        return out

    def eigenvalues(self) -> np.ndarray:
        vals = []
        for lam, deg in self.multiset():
            vals.extend([float(lam)] * deg)
        return np.sort(np.array(vals))

    def trace(self) -> Fraction:
        return sum((lam * deg for lam, deg in self.multiset()), Fraction(0))

    def csv_rows(self) -> list[tuple]:
        return [
            (r.two_s, r.lambda_minus, r.lambda_plus, r.deg_minus, r.deg_plus)
            for r in self.sectors
        ]


def rho_spectrum(n: int) -> RhoSpectrum:
    """Closed-form sector table of rho (no dense work)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    records = []
    for two_s in sector_spins(n):
        records.append(
            SectorRecord(
                two_s=two_s,
                lambda_minus=lambda_minus(n, two_s - 1),
                lambda_plus=lambda_plus(n, two_s + 1),
                deg_minus=(two_s + 1) * multiplicity(n, two_s - 1),
                deg_plus=(two_s + 1) * multiplicity(n, two_s + 1),
            )
        )
    return RhoSpectrum(n, tuple(records))


@dataclass(frozen=True)
class SigmaPort:
    n: int
    port: int
    matrix: np.ndarray = field(repr=False)


def build_sigma(n: int, i: int) -> SigmaPort:
    """sigma_i = P^-_{A_i B} (x) 1_{A-bar_i} / 2^(N-1), dense on A (x) B."""
    if not 1 <= i <= n:
        raise ValueError(f"port index {i} outside 1..{n}")
    limits.check_spins(n + 1)
    dims = [2] * (n + 1)
    mat = embed(P_SINGLET, [i - 1, n], dims) / 2 ** (n - 1)
    return SigmaPort(n, i, mat)


@lru_cache(maxsize=16)
def _rho_dense(n: int) -> np.ndarray:
    out = sum(build_sigma(n, i).matrix for i in range(1, n + 1))
    out.setflags(write=False)
    return out


def build_rho(n: int) -> tuple[np.ndarray, RhoSpectrum]:
    limits.check_spins(n + 1)
    return _rho_dense(n), rho_spectrum(n)


def c_of_s(n: int, two_s: int, y: float) -> float:
    """c(s, y) = s/(2s+1) (lambda^-_{s-1/2})^(-1/y) + (s+1)/(2s+1) (lambda^+_{s+1/2})^(-1/y)."""
    if y == 0:
        raise ValueError("y must be nonzero")
    if two_s not in port_spins(n):
        raise ValueError(f"2s={two_s} is not a spin of {n - 1} qubits")
    inv = 1.0 / y
    w_minus = two_s / (2 * (two_s + 1))
    w_plus = (two_s + 2) / (2 * (two_s + 1))
    out = w_plus * float(lambda_plus(n, two_s + 1)) ** (-inv)
    if w_minus:
        out += w_minus * float(lambda_minus(n, two_s - 1)) ** (-inv)
    return out


@dataclass(frozen=True)
class EigenVectorSet:
    """Eigenvectors |Psi(lambda^-+_j; m)> of rho as columns of ``matrix``.

    ``records[k]`` = (two_s, branch, two_j, two_m, path, kind) where ``kind`` is
    "I"/"II" according to the last coupling step (None for n = 1).
    """

    n: int
    matrix: np.ndarray = field(repr=False)
    records: tuple
    eigenvalues: np.ndarray = field(repr=False)

    def columns(self, two_s: int, branch: str | None = None, kind: str | None = None) -> list[int]:
        return [
            k
            for k, r in enumerate(self.records)
            if r[0] == two_s and (branch is None or r[1] == branch) and (kind is None or r[5] == kind)
        ]

    def projector(self, two_s: int, branch: str) -> np.ndarray:
        """1_-(s) or 1_+(s): identity on one branch of the total-spin-s block."""
        return _branch_projector(self.n, two_s, branch)


@lru_cache(maxsize=16)
def rho_eigenvectors(n: int) -> EigenVectorSet:
    """Build every eigenvector of rho from the Schur basis of A and CG coefficients."""
    limits.check_spins(n + 1)
    basis = schur_basis(n)
    cols = []
    records = []
    evals = []
    for two_j in spins(n):
        for path in basis.paths(two_j):
            kind = None if n == 1 else ("I" if path[-2] == two_j + 1 else "II")
            for branch, two_s, lam in (
                (MINUS, two_j + 1, lambda_minus(n, two_j)),
                (PLUS, two_j - 1, lambda_plus(n, two_j)),
            ):
                if two_s < 0:
                    continue
                for two_m in range(-two_s, two_s + 1, 2):
                    vec = np.zeros((2**n, 2))
                    # |Phi(j, m+1/2)>|0>_B <j, m+1/2; 1/2, -1/2|s, m>
                    k0 = basis.column_of(two_j, two_m + 1, path)
                    if k0 is not None:
                        vec[:, 0] = basis.matrix[:, k0] * cg(two_j, two_m + 1, -1, two_s)
                    # |Phi(j, m-1/2)>|1>_B <j, m-1/2; 1/2, +1/2|s, m>
                    k1 = basis.column_of(two_j, two_m - 1, path)
                    if k1 is not None:
                        vec[:, 1] = basis.matrix[:, k1] * cg(two_j, two_m - 1, 1, two_s)
                    cols.append(vec.reshape(-1))
                    records.append((two_s, branch, two_j, two_m, path, kind))
                    evals.append(float(lam))
    mat = np.array(cols).T
    mat.setflags(write=False)
    return EigenVectorSet(n, mat, tuple(records), np.array(evals))


@lru_cache(maxsize=64)
def _branch_projector(n: int, two_s: int, branch: str) -> np.ndarray:
    ev = rho_eigenvectors(n)
    v = ev.matrix[:, ev.columns(two_s, branch)]
    out = v @ v.T
    out.setflags(write=False)
    return out


def branch_projector(n: int, two_s: int, branch: str) -> np.ndarray:
    return _branch_projector(n, two_s, branch)


def sector_function(n: int, coeffs: dict[tuple[int, str], float]) -> np.ndarray:
    """sum over (2s, branch) of coeff * 1_branch(s)."""
    dim = 2 ** (n + 1)
    out = np.zeros((dim, dim))
    for (two_s, branch), c in coeffs.items():
        if c:
            out += c * _branch_projector(n, two_s, branch)
    return out


def rho_power(n: int, power: float) -> np.ndarray:
    """rho**power on its support, assembled from the eigenvector set."""
    coeffs = {}
    for r in rho_spectrum(n).sectors:
        if r.deg_minus and r.lambda_minus > 0:
            coeffs[(r.two_s, MINUS)] = float(r.lambda_minus) ** power
        if r.deg_plus:
            coeffs[(r.two_s, PLUS)] = float(r.lambda_plus) ** power
    return sector_function(n, coeffs)


def singlet_isometry(n: int, i: int) -> np.ndarray:
    """Columns |psi^->_{A_i B} (x) |k>_{A-bar_i}: maps A-bar_i (2^(N-1)) into A (x) B."""
    dims = [2] * (n + 1)
    rest = [k for k in range(n) if k != i - 1]
    local = np.kron(SINGLET.reshape(4, 1), np.eye(2 ** (n - 1)))
    return embed_vectors(local, [i - 1, n] + rest, dims)


@lru_cache(maxsize=64)
def port_sector_sigma(n: int, i: int, two_s: int) -> np.ndarray:
    """sigma_i(s) = P^-_{A_i B} (x) 1(s)_{A-bar_i} / 2^(N-1)."""
    v = singlet_isometry(n, i)
    out = v @ sector_projector(n - 1, two_s) @ v.T / 2 ** (n - 1)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class EigenReport:
    n: int
    max_residual: float
    vector_count: int
    orthonormality_error: float
    passed: bool


def verify_eigen_equation(n: int, tol: float = 1e-12) -> EigenReport:
    """Check rho|Psi> = lambda|Psi> for every constructed eigenvector."""
    limits.check_spins(n + 1)
    rho, _ = build_rho(n)
    ev = rho_eigenvectors(n)
    v = ev.matrix
    resid = rho @ v - v * ev.eigenvalues
    max_res = float(np.max(np.linalg.norm(resid, axis=0)))
    ortho = float(np.max(np.abs(v.T @ v - np.eye(v.shape[1]))))
    count = v.shape[1]
    ok = max_res <= tol and ortho <= tol and count == 2 ** (n + 1)
    return EigenReport(n, max_res, count, ortho, ok)


def log_multiplicity(n: int, two_j: int) -> float:
    """Natural log of multiplicity(n, 2j) via lgamma (for large n)."""
    a = (n - two_j) // 2
    b = (n + two_j) // 2 + 1
    return math.log(two_j + 1) + math.lgamma(n + 1) - math.lgamma(a + 1) - math.lgamma(b + 1)
