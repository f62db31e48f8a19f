"""Brute-force dense simulation of the port-selection teleportation channel.

The simulator never uses the sector structure: it builds the resource state
|psi> = (O (x) 1)|psi^->^(x)N, attaches the input on C, applies sqrt(Pi_i) on
A (x) C, and traces out everything except port B_i. It is the reference
against which closed-form values are checked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import limits
from ._tensor import (
    SINGLET,
    apply_local,
    embed,
    max_entangled,
    psd_power,
    psd_sqrt,
    reduced_density,
)
from .protocols import PovmSet, ResourceSpec, Variant, build_protocol


@dataclass(frozen=True)
class PureState:
    amplitudes: np.ndarray = field(repr=False)
    dims: tuple[int, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        if math.prod(self.dims) != self.amplitudes.size:
            raise ValueError(f"dims {self.dims} do not match {self.amplitudes.size} amplitudes")
        if len(self.labels) != len(self.dims):
            raise ValueError("one label per tensor factor is required")
        nrm = np.linalg.norm(self.amplitudes)
        if abs(nrm - 1) > 1e-12:
            raise ValueError(f"state norm {nrm} differs from 1")

    def density(self) -> "DensityMatrix":
        v = self.amplitudes
        return DensityMatrix(np.outer(v, v.conj()), self.dims, self.labels)


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray = field(repr=False)
    dims: tuple[int, ...] = (2,)
    labels: tuple[str, ...] = ("C",)

    def __post_init__(self):
        m = self.matrix
        d = math.prod(self.dims)
        if m.shape != (d, d):
            raise ValueError(f"matrix shape {m.shape} does not match dims {self.dims}")
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise ValueError("density matrix is not Hermitian")
        w = np.linalg.eigvalsh(m)
        if w[0] < -1e-12:
            raise ValueError(f"density matrix is not PSD (min eigenvalue {w[0]:.3e})")
        tr = float(np.trace(m).real)
        if tr > 1 + 1e-12:
            raise ValueError(f"trace {tr} exceeds 1")

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)


@dataclass
class ChannelResult:
    outputs: dict[int, DensityMatrix]  # success / deterministic outcomes only
    entanglement_fidelity: float
    average_fidelity: float
    success_probability: float
    fidelity_spread: Optional[float] = None

    def total_output(self) -> np.ndarray:
        return sum(o.matrix for o in self.outputs.values())


def kraus_operators(resource: ResourceSpec, povm: PovmSet) -> dict[int, np.ndarray]:
    """sqrt(Pi_i) on A (x) C, where Pi_i = (O^-1 (x) 1) Pi~_i (O^-1 (x) 1)."""
    if resource.n != povm.n:
        raise ValueError(f"resource has N={resource.n}, POVM has N={povm.n}")
    o_inv = np.kron(resource.o_matrix(-0.5), np.eye(2))
    return {label: psd_sqrt(o_inv @ op @ o_inv) for label, op in povm.outcomes()}


def _check_mode(povm: PovmSet, mode: str | None) -> str:
    expected = "prob" if povm.probabilistic else "det"
    if mode is None:
        return expected
    if mode not in ("det", "prob"):
        raise ValueError(f"mode must be 'det' or 'prob', got {mode!r}")
    if mode != expected:
        raise ValueError(f"{povm.variant} POVM cannot be simulated in {mode} mode")
    return mode


def outcome_maps(resource: ResourceSpec, povm: PovmSet) -> dict[int, np.ndarray]:
    """For every outcome i, the array T[c, c', b, b'] = Lambda_i(|c><c'|) on port B_i.

    Outcome 0 (failure) is included for probabilistic POVMs.
    """
    n = resource.n
    limits.check_amplitudes(2 ** (2 * n + 1))
    psi = resource.state().reshape(2**n, 2**n)  # rows A, cols B_1..B_N
    return maps_from_kraus(psi, kraus_operators(resource, povm))


def maps_from_kraus(psi: np.ndarray, kraus: dict[int, np.ndarray]) -> dict[int, np.ndarray]:
    """Outcome maps for an arbitrary resource (2^N x 2^N amplitude matrix, rows A) and Kraus set.

    Kraus operators act on A (x) C with C last; outcome i >= 1 reads port B_i,
    outcome 0 is traced like port 1 (its output is discarded by callers).
    """
    n = int(round(math.log2(psi.shape[0])))
    out = {}
    for label, k in kraus.items():
        port = max(label, 1) - 1
        # W_c[(a', c'), b] = sum_a K[(a', c'), (a, c)] psi[a, b], with port b_i moved forward
        w = []
        for c in range(2):
            wc = (k[:, c::2] @ psi).reshape([2 ** (n + 1)] + [2] * n)
            w.append(np.moveaxis(wc, 1 + port, 1).reshape(2 ** (n + 1), 2, -1))
        t = np.empty((2, 2, 2, 2), dtype=complex)
        for c in range(2):
            for cp in range(2):
                t[c, cp] = np.einsum("rbx,rdx->bd", w[c], w[cp].conj())
        out[label] = t
    return out


def _apply_maps(maps: dict[int, np.ndarray], sigma: np.ndarray) -> dict[int, np.ndarray]:
    return {label: np.einsum("cd,cdbe->be", sigma, t) for label, t in maps.items()}


def apply_channel(
    resource: ResourceSpec,
    povm: PovmSet,
    input_state: DensityMatrix | PureState | np.ndarray,
    mode: str | None = None,
) -> ChannelResult:
    """Send one input through the channel; per-outcome unnormalized outputs on B."""
    mode = _check_mode(povm, mode)
    sigma = _as_density(input_state).matrix
    maps = outcome_maps(resource, povm)
    outs = _apply_maps(maps, sigma)
    if mode == "prob":
        outs.pop(0)
    f_ent, p = fidelity_from_maps(maps, mode)
    results = {label: DensityMatrix(_clean(m)) for label, m in outs.items()}
    return ChannelResult(results, f_ent, average_fidelity(f_ent), p)


def _clean(m: np.ndarray) -> np.ndarray:
    m = 0.5 * (m + m.conj().T)
    return m


def _as_density(x) -> DensityMatrix:
    if isinstance(x, DensityMatrix):
        return x
    if isinstance(x, PureState):
        return x.density()
    arr = np.asarray(x, dtype=complex)
    if arr.ndim == 1:
        return PureState(arr, (arr.size,), ("C",)).density()
    return DensityMatrix(arr)


def fidelity_from_maps(maps: dict[int, np.ndarray], mode: str) -> tuple[float, float]:
    """Entanglement fidelity via linearity: (Lambda (x) 1)(P^-) from matrix units."""
    s = SINGLET.reshape(2, 2)  # s[c, d]
    f = 0.0
    p = 0.0
    for label, t in maps.items():
        if mode == "prob" and label == 0:
            continue
        # omega[b d, b' d'] = sum_{c c'} s[c,d] s[c',d'] T[c,c',b,b']
        omega = np.einsum("cd,xe,cxbg->bdge", s, s, t).reshape(4, 4)
        f += float(np.real(SINGLET @ omega @ SINGLET))
        p += float(np.real(np.trace(omega)))
    if mode == "prob":
        return f / p, p
    return f, p


def teleport_half_singlet(
    resource: ResourceSpec, povm: PovmSet, mode: str | None = None
) -> dict[int, np.ndarray]:
    """Teleport half of P^-_{CD}; returns unnormalized states on (B_i, D) per outcome.

    Literal simulation with the reference qubit D kept in the state vector.
    """
    mode = _check_mode(povm, mode)
    n = resource.n
    limits.check_amplitudes(4 ** (n + 1))
    # factors: A_1..A_N, B_1..B_N, C, D
    dims = [2] * (2 * n + 2)
    state = np.kron(resource.state(), SINGLET)
    targets = list(range(n)) + [2 * n]
    out = {}
    for label, k in kraus_operators(resource, povm).items():
        if mode == "prob" and label == 0:
            continue
        post = apply_local(state, k, targets, dims)
        out[label] = reduced_density(post, [n + label - 1, 2 * n + 1], dims)
    return out


def entanglement_fidelity(resource: ResourceSpec, povm: PovmSet, mode: str | None = None) -> float:
    """F = tr P^-_{BD} (Lambda (x) 1)(P^-_{CD}); normalized by p in probabilistic mode."""
    mode = _check_mode(povm, mode)
    states = teleport_half_singlet(resource, povm, mode)
    f = sum(float(np.real(SINGLET @ rho @ SINGLET)) for rho in states.values())
    if mode == "prob":
        return f / success_probability(resource, povm)
    return f


def success_probability(resource: ResourceSpec, povm: PovmSet) -> float:
    """Average success probability (input half of a singlet, success outcomes only)."""
    states = teleport_half_singlet(resource, povm)
    return sum(float(np.real(np.trace(rho))) for rho in states.values())


def average_fidelity(entanglement_fidelity: float, d: int = 2) -> float:
    return (d * entanglement_fidelity + 1) / (d + 1)


def dense_metric(variant: Variant | str, n: int) -> float:
    """F (deterministic) or p (probabilistic) from the brute-force simulation."""
    proto = build_protocol(variant, n)
    if proto.variant.probabilistic:
        return success_probability(proto.resource, proto.povm)
    return entanglement_fidelity(proto.resource, proto.povm)


# --------------------------------------------------------------------------
# Haar inputs and covariance


def _rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def haar_input(seed_or_rng=0) -> PureState:
    """Haar-random qubit: two standard complex Gaussians, normalized."""
    return PureState(haar_inputs(1, seed_or_rng)[0], (2,), ("C",))


def haar_inputs(k: int, seed_or_rng=0) -> np.ndarray:
    if k < 1:
        raise ValueError("need at least one sample")
    rng = _rng(seed_or_rng)
    z = rng.standard_normal((k, 2)) + 1j * rng.standard_normal((k, 2))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def output_fidelities(maps: dict[int, np.ndarray], inputs: np.ndarray, mode: str = "det") -> np.ndarray:
    """<chi|Lambda(|chi><chi|)|chi> for each row chi (success-normalized in prob mode)."""
    fid = np.zeros(len(inputs))
    tr = np.zeros(len(inputs))
    for label, t in maps.items():
        if mode == "prob" and label == 0:
            continue
        out = np.einsum("kc,kd,cdbe->kbe", inputs, inputs.conj(), t)
        fid += np.real(np.einsum("kb,kbe,ke->k", inputs.conj(), out, inputs))
        tr += np.real(np.einsum("kbb->k", out))
    return fid / tr if mode == "prob" else fid


@dataclass(frozen=True)
class CovarianceReport:
    variant: Variant
    n: int
    samples: int
    seed: int
    min_fidelity: float
    max_fidelity: float
    mean_fidelity: float
    standard_error: float
    expected_average: float

    @property
    def spread(self) -> float:
        return self.max_fidelity - self.min_fidelity


def covariance_check(n: int, variant: Variant | str, k_samples: int, seed: int = 0) -> CovarianceReport:
    """Output-fidelity spread over Haar inputs; zero spread means depolarizing behavior."""
    variant = Variant(variant)
    if variant.probabilistic:
        raise ValueError("covariance check applies to deterministic variants")
    if k_samples < 1:
        raise ValueError("k_samples must be positive")
    proto = build_protocol(variant, n)
    maps = outcome_maps(proto.resource, proto.povm)
    fids = output_fidelities(maps, haar_inputs(k_samples, seed))
    f_ent, _ = fidelity_from_maps(maps, "det")
    se = float(np.std(fids, ddof=1) / math.sqrt(k_samples)) if k_samples > 1 else 0.0
    return CovarianceReport(
        variant, n, k_samples, seed,
        float(fids.min()), float(fids.max()), float(fids.mean()), se, average_fidelity(f_ent),
    )


@dataclass(frozen=True)
class SuccessSpread:
    variant: Variant
    n: int
    samples: int
    seed: int
    min_probability: float
    max_probability: float

    @property
    def spread(self) -> float:
        return self.max_probability - self.min_probability


def success_spread(n: int, variant: Variant | str, k_samples: int, seed: int = 0) -> SuccessSpread:
    """Range of the success probability over Haar inputs (reported, not asserted)."""
    variant = Variant(variant)
    if not variant.probabilistic:
        raise ValueError("success spread applies to probabilistic variants")
    proto = build_protocol(variant, n)
    maps = outcome_maps(proto.resource, proto.povm)
    inputs = haar_inputs(k_samples, seed)
    probs = np.zeros(k_samples)
    for label, t in maps.items():
        if label == 0:
            continue
        out = np.einsum("kc,kd,cdbe->kbe", inputs, inputs.conj(), t)
        probs += np.real(np.einsum("kbb->k", out))
    return SuccessSpread(variant, n, k_samples, seed, float(probs.min()), float(probs.max()))


# --------------------------------------------------------------------------
# qudit square-root measurement


@dataclass(frozen=True)
class QuditReport:
    d: int
    n: int
    entanglement_fidelity: float
    average_fidelity: float
    bound: float
    trace_rho_squared: float
    trace_rho_squared_expected: float

    @property
    def bound_satisfied(self) -> bool:
        return self.bound < 0 or self.average_fidelity >= self.bound - 1e-12


def qudit_sigmas(d: int, n: int) -> list[np.ndarray]:
    p_plus = np.outer(max_entangled(d), max_entangled(d))
    dims = [d] * (n + 1)
    return [embed(p_plus, [i, n], dims) / d ** (n - 1) for i in range(n)]


def qudit_srm_check(d: int, n: int) -> QuditReport:
    """SRM with |phi+>^(x)N on qudits, simulated densely; compares f with 1 - d(d-1)/N."""
    if d < 2 or n < 1:
        raise ValueError("need d >= 2 and n >= 1")
    limits.check_amplitudes(d ** (2 * n + 2))
    sigmas = qudit_sigmas(d, n)
    rho = sum(sigmas)
    r = psd_power(rho, -0.5)
    elems = [r @ s @ r for s in sigmas]
    excess = (np.eye(d ** (n + 1)) - sum(elems)) / n
    kraus = [psd_sqrt(e + excess) for e in elems]

    # |phi+>^(x)N ordered A_1..A_N, B_1..B_N, then C, D holding |phi+>
    phi = max_entangled(d)
    t = np.ones(1)
    for _ in range(n):
        t = np.kron(t, phi)
    t = t.reshape([d] * (2 * n)).transpose(list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2)))
    state = np.kron(t.reshape(-1), phi)
    dims = [d] * (2 * n + 2)
    targets = list(range(n)) + [2 * n]
    f = 0.0
    for i, k in enumerate(kraus):
        post = apply_local(state, k, targets, dims)
        omega = reduced_density(post, [n + i, 2 * n + 1], dims)
        f += float(np.real(phi @ omega @ phi))
    favg = average_fidelity(f, d)
    tr2 = float(np.real(np.trace(rho @ rho)))
    expected = n / d ** (n - 1) + n * (n - 1) / d ** (n + 1)
    return QuditReport(d, n, f, favg, 1 - d * (d - 1) / n, tr2, expected)


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(a - b))))


def conditioned_outputs(
    resource: ResourceSpec, povm: PovmSet, inputs: Sequence[np.ndarray]
) -> list[dict[int, tuple[float, np.ndarray]]]:
    """Per input: outcome -> (branch trace, normalized output) for success outcomes."""
    maps = outcome_maps(resource, povm)
    res = []
    for chi in inputs:
        sigma = np.outer(chi, np.conj(chi))
        outs = _apply_maps(maps, sigma)
        row = {}
        for label, m in outs.items():
            if povm.probabilistic and label == 0:
                continue
            tr = float(np.real(np.trace(m)))
            row[label] = (tr, m / tr if tr > 0 else m)
        res.append(row)
    return res
