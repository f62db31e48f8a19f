"""Index-arithmetic helpers: embedding local operators, partial traces, PSD functions.

Every multi-party object is a dense array whose tensor factors are listed in
``dims`` (row-major, first factor most significant).
"""

from __future__ import annotations

from math import prod
from typing import Sequence

import numpy as np

SINGLET = np.array([0.0, 1.0, -1.0, 0.0]) / np.sqrt(2.0)
P_SINGLET = np.outer(SINGLET, SINGLET)

# Eigenvalues in [-PSD_CLAMP, 0] are treated as roundoff.
PSD_CLAMP = 1e-12


def max_entangled(d: int) -> np.ndarray:
    """|phi+> = sum_k |kk> / sqrt(d)."""
    v = np.zeros(d * d)
    v[:: d + 1] = 1.0 / np.sqrt(d)
    return v


def embed(op: np.ndarray, targets: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Dense operator acting as ``op`` on ``targets`` (in that order) and identity elsewhere."""
    dims = list(dims)
    targets = list(targets)
    n = len(dims)
    rest = [k for k in range(n) if k not in targets]
    d_rest = prod(dims[k] for k in rest)
    big = np.kron(op, np.eye(d_rest, dtype=op.dtype))
    order = targets + rest
    shape = [dims[k] for k in order]
    big = big.reshape(shape + shape)
    # axis position of original factor k inside ``order``
    pos = np.argsort(order)
    perm = list(pos) + [n + p for p in pos]
    d = prod(dims)
    return big.transpose(perm).reshape(d, d)


def embed_vectors(vecs: np.ndarray, targets: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Reorder columns of ``vecs`` (factors listed as ``targets``) into natural factor order."""
    dims = list(dims)
    targets = list(targets)
    n = len(dims)
    shape = [dims[k] for k in targets]
    k_cols = vecs.shape[1]
    t = vecs.reshape(shape + [k_cols])
    pos = np.argsort(targets)
    return t.transpose(list(pos) + [n]).reshape(prod(dims), k_cols)


def apply_local(state: np.ndarray, op: np.ndarray, targets: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Apply ``op`` to the ``targets`` factors of a flat state vector."""
    dims = list(dims)
    n = len(dims)
    t = state.reshape(dims)
    t = np.moveaxis(t, list(targets), list(range(len(targets))))
    front = prod(dims[k] for k in targets)
    moved_shape = t.shape
    t = (op @ t.reshape(front, -1)).reshape(moved_shape)
    t = np.moveaxis(t, list(range(len(targets))), list(targets))
    return t.reshape(-1) if n else t


def reduced_density(state: np.ndarray, keep: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Reduced density matrix of a pure state on the ``keep`` factors (in that order)."""
    dims = list(dims)
    t = np.moveaxis(state.reshape(dims), list(keep), list(range(len(keep))))
    dk = prod(dims[k] for k in keep)
    m = t.reshape(dk, -1)
    return m @ m.conj().T


def partial_trace(rho: np.ndarray, keep: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Trace out every factor not in ``keep``; result ordered as ``keep``."""
    dims = list(dims)
    n = len(dims)
    keep = list(keep)
    t = rho.reshape(dims + dims)
    traced = [k for k in range(n) if k not in keep]
    # bring kept row axes, kept col axes, then traced row/col pairs
    perm = keep + [n + k for k in keep] + traced + [n + k for k in traced]
    t = t.transpose(perm)
    dk = prod(dims[k] for k in keep)
    dt = prod(dims[k] for k in traced)
    t = t.reshape(dk, dk, dt, dt)
    return np.trace(t, axis1=2, axis2=3)


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def min_eigenvalue(m: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(hermitian_part(m))[0])


def psd_sqrt(m: np.ndarray, clamp: float = PSD_CLAMP) -> np.ndarray:
    """Principal square root of a PSD matrix; negativity beyond ``clamp`` is an error."""
    w, v = np.linalg.eigh(hermitian_part(m))
    if w[0] < -clamp:
        raise ValueError(f"matrix is not PSD (min eigenvalue {w[0]:.3e})")
    w = np.sqrt(np.clip(w, 0.0, None))
    return (v * w) @ v.conj().T


def psd_power(m: np.ndarray, power: float, rel_cut: float = 1e-12) -> np.ndarray:
    """``m**power`` on the support of ``m`` (eigenvalues below rel_cut * max are dropped)."""
    w, v = np.linalg.eigh(hermitian_part(m))
    cut = rel_cut * max(abs(w[-1]), abs(w[0]))
    wp = np.zeros_like(w)
    keep = w > cut
    wp[keep] = w[keep] ** power
    return (v * wp) @ v.conj().T


def entropy_bits(probs: np.ndarray) -> float:
    """Shannon entropy in bits; zero entries contribute zero."""
    p = np.asarray(probs, dtype=float)
    p = p[p > 0]
    return max(0.0, float(-np.sum(p * np.log2(p))))
