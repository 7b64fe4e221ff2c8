"""Augmented-state switched-system view of bounded-delay asynchrony.

With history depth ``tau_d`` the state ``x~(k) = [x(k); x(k-1); ...;
x(k-tau_d)]`` evolves as ``x~(k+1) = W x~(k)`` where the modal matrix ``W``
depends on which delay each directed link experiences at step ``k``. Block
``(1, r)`` of ``W`` holds the weights read with delay ``r - 1``; the lower
block rows just shift the history down.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .exceptions import EnumerationCapError
from .stochastic import as_row_stochastic, matvec_exact

ENUMERATION_CAP = 10**6


def delay_pairs(F) -> list[tuple[int, int]]:
    """Off-diagonal support of ``F`` in row-major order.

    This fixes the order in which delays are drawn and enumerated.
    """
    F = np.asarray(F)
    return [(int(i), int(j)) for i, j in zip(*np.nonzero(F > 0)) if i != j]


@dataclass(frozen=True)
class DelayAssignment:
    """Delay ``d_ij`` in ``[0, tau_d]`` for every link ``j -> i`` of ``F``."""

    delays: dict
    tau_d: int

    def __post_init__(self):
        if self.tau_d < 0:
            raise ValueError("tau_d must be nonnegative")
        for (i, j), d in self.delays.items():
            if i == j:
                raise ValueError(f"self-delay ({i}, {i}) is not allowed")
            if not 0 <= d <= self.tau_d:
                raise ValueError(
                    f"delay {d} on pair ({i}, {j}) outside [0, {self.tau_d}]"
                )

    @classmethod
    def from_sequence(cls, pairs, delays, tau_d):
        return cls(dict(zip(pairs, (int(d) for d in delays))), int(tau_d))

    @classmethod
    def zeros(cls, F, tau_d=0):
        return cls({p: 0 for p in delay_pairs(F)}, tau_d)


@dataclass(frozen=True, eq=False)
class ModalMatrix:
    matrix: np.ndarray
    assignment: DelayAssignment

    @property
    def n(self) -> int:
        return self.matrix.shape[0] // (self.assignment.tau_d + 1)

    @property
    def tau_d(self) -> int:
        return self.assignment.tau_d


def modal_matrix(F, d: DelayAssignment) -> ModalMatrix:
    F = as_row_stochastic(F)
    n = F.shape[0]
    expected = set(delay_pairs(F))
    if set(d.delays) != expected:
        missing = sorted(expected - set(d.delays))
        extra = sorted(set(d.delays) - expected)
        raise ValueError(
            f"delay keys do not match the off-diagonal support of F "
            f"(missing {missing}, unexpected {extra})"
        )
    depth = d.tau_d + 1
    W = np.zeros((n * depth, n * depth))
    idx = np.arange(n)
    W[idx, idx] = F[idx, idx]
    for (i, j), delay in d.delays.items():
        W[i, delay * n + j] = F[i, j]
    for r in range(1, depth):
        W[r * n + idx, (r - 1) * n + idx] = 1.0
    return ModalMatrix(as_row_stochastic(W), d)


def mode_count(F, tau_d) -> int:
    return (tau_d + 1) ** len(delay_pairs(F))


def enumerate_modes(F, tau_d, cap=ENUMERATION_CAP) -> list[ModalMatrix]:
    """Every modal matrix for ``F`` at delay bound ``tau_d``.

    Ordered lexicographically by the delay tuple over :func:`delay_pairs`.
    """
    pairs = delay_pairs(F)
    count = (tau_d + 1) ** len(pairs)
    if count > cap:
        raise EnumerationCapError(
            f"{tau_d + 1}**{len(pairs)} = {count} modes exceeds the cap of {cap}; "
            "sample delay assignments instead"
        )
    return [
        modal_matrix(F, DelayAssignment.from_sequence(pairs, ds, tau_d))
        for ds in itertools.product(range(tau_d + 1), repeat=len(pairs))
    ]


def lift_initial(x0, tau_d) -> np.ndarray:
    """Augmented initial state; the pre-history repeats ``x0``."""
    return np.tile(np.asarray(x0, dtype=float), tau_d + 1)


def step(W, s) -> np.ndarray:
    M = W.matrix if isinstance(W, ModalMatrix) else np.asarray(W)
    s = np.asarray(s, dtype=float)
    if M.shape[1] != s.shape[0]:
        raise ValueError(f"dimension mismatch: matrix {M.shape} vs state {s.shape}")
    return matvec_exact(M, s)


def _matrices(modes):
    return [m.matrix if isinstance(m, ModalMatrix) else np.asarray(m) for m in modes]


def chain_prefixes(modes: Iterable) -> Iterator[np.ndarray]:
    """Yield ``W~(0), W~(1), ...`` where ``W~(k) = W_k ... W_0``."""
    P = None
    for W in _matrices(modes):
        if P is not None and W.shape != P.shape:
            raise ValueError(f"dimension mismatch: {W.shape} vs {P.shape}")
        P = W.copy() if P is None else W @ P
        yield P


def chain(modes: Sequence) -> np.ndarray:
    P = None
    for P in chain_prefixes(modes):
        pass
    if P is None:
        raise ValueError("chain needs at least one mode")
    return as_row_stochastic(P, tol=1e-10)


def block_row(M, n, r) -> np.ndarray:
    return M[r * n:(r + 1) * n]


def prefix_structure_holds(prefixes: Sequence, n: int, tau_d: int) -> bool:
    """Check that lower block rows of each prefix repeat earlier first rows.

    Block row ``r`` of ``W~(k)`` must equal block row 0 of ``W~(k - r)``.
    Before the chain starts, ``W~(-1) = I`` and the rows of ``W~(t)`` for
    ``t < -1`` are taken as block row ``-t - 1`` of the identity, which is
    what the shift structure produces. Comparison is exact.
    """
    N = n * (tau_d + 1)
    eye = np.eye(N)

    def first_row(t):
        if t >= 0:
            return block_row(prefixes[t], n, 0)
        return block_row(eye, n, -t - 1)

    for k, P in enumerate(prefixes):
        for r in range(1, tau_d + 1):
            if not np.array_equal(block_row(P, n, r), first_row(k - r)):
                return False
    return True


def synchronous_lift(F_star, tau_d) -> np.ndarray:
    """Limit of the lifted synchronous chain: every block row is ``[F*, 0, ..., 0]``."""
    F_star = np.asarray(F_star, dtype=float)
    n = F_star.shape[0]
    depth = tau_d + 1
    L = np.zeros((n * depth, n * depth))
    for r in range(depth):
        L[r * n:(r + 1) * n, :n] = F_star
    return L


def max_row_spread(P, n) -> float:
    """Largest difference between any block row of ``P`` and its first block row."""
    top = block_row(P, n, 0)
    depth = P.shape[0] // n
    return max(
        (float(np.abs(block_row(P, n, r) - top).max()) for r in range(1, depth)),
        default=0.0,
    )
