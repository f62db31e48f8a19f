"""SU(2) coupling of qubits: Clebsch-Gordan coefficients, multiplicities, Schur basis.

Half-integers are carried as doubled integers (``two_j = 2j``) so that all
quantum-number arithmetic is exact. Qubits map to spins as |0> -> m=-1/2,
|1> -> m=+1/2. Spins are coupled left to right, A_1 first.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from math import factorial, sqrt
from typing import Iterator

import numpy as np

from . import limits


@dataclass(frozen=True, order=True)
class SpinLabel:
    """Quantum numbers (j, m) stored as (2j, 2m)."""

    two_j: int
    two_m: int

    def __post_init__(self):
        if self.two_j < 0:
            raise ValueError(f"negative spin 2j={self.two_j}")
        if abs(self.two_m) > self.two_j:
            raise ValueError(f"|m| > j for (2j, 2m)=({self.two_j}, {self.two_m})")
        if (self.two_j - self.two_m) % 2:
            raise ValueError(f"parity mismatch for (2j, 2m)=({self.two_j}, {self.two_m})")

    @property
    def j(self) -> float:
        return self.two_j / 2

    @property
    def m(self) -> float:
        return self.two_m / 2


def cg(two_j1: int, two_m1: int, half_spin_sign: int, two_J: int) -> float:
    """<j1, m1; 1/2, sign/2 | J, m1 + sign/2> with Condon-Shortley phases.

    Returns 0 when J is not j1 +- 1/2 or the total projection lies outside [-J, J].
    """
    SpinLabel(two_j1, two_m1)
    if half_spin_sign not in (1, -1):
        raise ValueError(f"half_spin_sign must be +1 or -1, got {half_spin_sign}")
    if two_J < 0:
        raise ValueError(f"negative total spin 2J={two_J}")
    two_M = two_m1 + half_spin_sign
    if abs(two_M) > two_J:
        return 0.0
    denom = 2 * (two_j1 + 1)
    if two_J == two_j1 + 1:
        if half_spin_sign > 0:
            return sqrt((two_j1 + two_M + 1) / denom)
        return sqrt((two_j1 - two_M + 1) / denom)
    if two_J == two_j1 - 1:
        if half_spin_sign > 0:
            return -sqrt((two_j1 - two_M + 1) / denom)
        return sqrt((two_j1 + two_M + 1) / denom)
    return 0.0


def multiplicity(n: int, two_j: int) -> int:
    """Number of copies of the spin-j irrep in n spin-1/2s (0 when j is out of range)."""
    if n < 0 or two_j < 0 or two_j > n or (n - two_j) % 2:
        return 0
    a = (n - two_j) // 2
    b = (n + two_j) // 2 + 1
    return (two_j + 1) * factorial(n) // (factorial(a) * factorial(b))


def spins(n: int) -> list[int]:
    """Allowed 2j for n spins, ascending."""
    return list(range(n % 2, n + 1, 2))


@dataclass(frozen=True)
class SchurVector:
    sector: SpinLabel
    path: tuple[int, ...]  # doubled intermediate spins (2j_1, ..., 2j_n)
    amplitudes: np.ndarray


@lru_cache(maxsize=None)
def _build(n: int) -> tuple[np.ndarray, tuple[tuple[int, int, tuple[int, ...]], ...]]:
    if n == 1:
        mat = np.eye(2)
        labels = ((1, -1, (1,)), (1, 1, (1,)))
        mat.setflags(write=False)
        return mat, labels
    prev, prev_labels = _build(n - 1)
    index = {lab: k for k, lab in enumerate(prev_labels)}

    new_labels = []
    for two_j, _, path in prev_labels:
        if _ != -two_j:
            continue  # one entry per (j, path)
        for step in (-1, 1):
            two_J = two_j + step
            if two_J < 0:
                continue
            for two_M in range(-two_J, two_J + 1, 2):
                new_labels.append((two_J, two_M, path + (two_J,)))
    new_labels.sort()

    k = len(new_labels)
    idx = np.zeros((2, k), dtype=np.intp)
    coef = np.zeros((2, k))
    for col, (two_J, two_M, path) in enumerate(new_labels):
        two_j = path[-2]
        for bit, sign in ((0, -1), (1, 1)):
            two_m1 = two_M - sign
            if abs(two_m1) > two_j:
                continue
            idx[bit, col] = index[(two_j, two_m1, path[:-1])]
            coef[bit, col] = cg(two_j, two_m1, sign, two_J)
    mat = np.empty((prev.shape[0], 2, k))
    mat[:, 0, :] = prev[:, idx[0]] * coef[0]
    mat[:, 1, :] = prev[:, idx[1]] * coef[1]
    mat = mat.reshape(2**n, k)
    mat.setflags(write=False)
    return mat, tuple(new_labels)


class SchurBasis:
    """Orthonormal SU(2)-adapted basis of n qubits.

    ``matrix`` holds the basis vectors as columns (real, 2^n x 2^n); ``labels[k]``
    is ``(two_j, two_m, path)`` for column k, sorted by (j, m, path).
    """

    def __init__(self, n: int, limit: int | None = None):
        if n < 1:
            raise ValueError(f"need at least one spin, got n={n}")
        limits.check_spins(n, limit)
        self.n = n
        self.matrix, self.labels = _build(n)

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self) -> Iterator[SchurVector]:
        for k in range(len(self)):
            yield self[k]

    def __getitem__(self, k: int) -> SchurVector:
        two_j, two_m, path = self.labels[k]
        return SchurVector(SpinLabel(two_j, two_m), path, self.matrix[:, k])

    def columns(self, two_j: int, two_m: int | None = None) -> list[int]:
        return [
            k
            for k, (tj, tm, _) in enumerate(self.labels)
            if tj == two_j and (two_m is None or tm == two_m)
        ]

    def column_of(self, two_j: int, two_m: int, path: tuple[int, ...]) -> int | None:
        return _column_index(self.n).get((two_j, two_m, path))

    def paths(self, two_j: int) -> list[tuple[int, ...]]:
        return sorted({p for tj, tm, p in self.labels if tj == two_j and tm == -tj})

    def projector(self, two_j: int) -> np.ndarray:
        """Projector onto the total-spin-j subspace."""
        return sector_projector(self.n, two_j)

    def to_json(self) -> str:
        rows = [
            {
                "two_j": tj,
                "two_m": tm,
                "path": list(p),
                "re": self.matrix[:, k].tolist(),
                "im": [0.0] * self.matrix.shape[0],
            }
            for k, (tj, tm, p) in enumerate(self.labels)
        ]
        return json.dumps(rows)


@lru_cache(maxsize=None)
def _column_index(n: int) -> dict:
    return {lab: k for k, lab in enumerate(_build(n)[1])}


def schur_basis(n: int, limit: int | None = None) -> SchurBasis:
    return SchurBasis(n, limit)


@lru_cache(maxsize=64)
def sector_projector(n: int, two_j: int) -> np.ndarray:
    """Projector onto total spin j of n qubits (zero matrix if j is not allowed)."""
    if n == 0:
        out = np.ones((1, 1)) if two_j == 0 else np.zeros((1, 1))
        out.setflags(write=False)
        return out
    basis = SchurBasis(n)
    cols = basis.columns(two_j)
    v = basis.matrix[:, cols]
    out = v @ v.T
    out.setflags(write=False)
    return out
