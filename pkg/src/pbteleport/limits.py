"""Size limits for dense constructions and the error raised when they are exceeded."""

from __future__ import annotations

# Largest spin count for which a dense Schur basis is built (2^14 = 16384 vectors).
DENSE_LIMIT_SPINS = 14

# Largest state vector (in amplitudes) the channel simulator will allocate.
MAX_AMPLITUDES = 2**24

# Largest port count for residual-entanglement runs (2N+2 qubits incl. reference).
RESIDUAL_LIMIT = 10


class CapacityError(RuntimeError):
    """Requested size exceeds a configured dense limit."""

    def __init__(self, what: str, requested: int, limit: int):
        self.requested = requested
        self.limit = limit
        super().__init__(f"{what}: requested {requested}, limit is {limit}")


def check_spins(n: int, limit: int | None = None) -> None:
    limit = DENSE_LIMIT_SPINS if limit is None else limit
    if n > limit:
        raise CapacityError("dense spin count", n, limit)


def check_amplitudes(count: int, limit: int | None = None) -> None:
    limit = MAX_AMPLITUDES if limit is None else limit
    if count > limit:
        raise CapacityError("dense amplitude count", count, limit)
