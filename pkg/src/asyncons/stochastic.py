"""Row-stochastic matrix algebra.

Matrices are plain ``numpy`` arrays. Functions that return a row-stochastic
matrix hand back a read-only float64 copy that has passed
:func:`is_row_stochastic`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    ConvergenceError,
    NotRowStochasticError,
    StationaryError,
    StructureError,
)

STOCHASTIC_TOL = 1e-12


def is_row_stochastic(M, tol=STOCHASTIC_TOL) -> bool:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        return False
    if np.any(M < -tol) or np.any(M > 1 + tol):
        return False
    return bool(np.all(np.abs(M.sum(axis=1) - 1.0) <= tol))


def as_row_stochastic(M, tol=STOCHASTIC_TOL) -> np.ndarray:
    """Validate ``M`` and return it as a read-only float array."""
    M = np.array(M, dtype=float)
    if not is_row_stochastic(M, tol):
        sums = M.sum(axis=1)
        bad = int(np.argmax(np.abs(sums - 1.0)))
        raise NotRowStochasticError(
            f"matrix is not row-stochastic at tol={tol:g} "
            f"(worst row {bad} sums to {sums[bad]!r}, min entry {M.min()!r})"
        )
    M.setflags(write=False)
    return M


def product(A, B) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise ValueError(f"dimension mismatch: {A.shape} vs {B.shape}")
    return as_row_stochastic(A @ B)


@dataclass(frozen=True)
class PerronEstimate:
    value: float
    lower: float
    upper: float
    iterations: int
    method: str
    converged: bool


def _gelfand(M, tol, max_squarings=64, min_squarings=40):
    """Upper bounds ``||M**k||_inf ** (1/k)`` for ``k = 2**j``.

    The power is renormalised every squaring so that neither underflow nor
    overflow occurs; ``log_scale`` carries the removed magnitude. Successive
    estimates can agree closely long before ``k`` is large enough to wash out
    the polynomial factor of a (near-)Jordan block, so no estimate is accepted
    before ``2**min_squarings``.
    """
    B = M.copy()
    log_scale = 0.0
    k = 1
    prev = math.inf
    for j in range(max_squarings):
        nrm = float(np.abs(B).sum(axis=1).max())
        if nrm == 0.0:
            return 0.0, j, True
        log_scale += math.log(nrm)
        B = B / nrm
        est = math.exp(log_scale / k)
        if j >= min_squarings and abs(est - prev) <= tol:
            return est, j, True
        prev = est
        B = B @ B
        log_scale *= 2
        k *= 2
    return prev, max_squarings, False


def spectral_radius(M, tol=1e-10, max_iter=100_000, full_output=False):
    """Perron root of a nonnegative square matrix.

    Power iteration runs on ``I + M``, which has the same Perron vector and a
    strictly dominant eigenvalue ``1 + rho(M)``. Starting from the all-ones
    vector keeps every iterate positive, so the Collatz-Wielandt ratios
    ``min (Ax)_i / x_i`` and ``max (Ax)_i / x_i`` bracket ``1 + rho``. When
    the bracket fails to close (reducible matrices whose Perron vector has
    zeros, or Jordan blocks at the Perron root), the Gelfand formula with
    repeated squaring supplies the estimate.

    Returns a float, or a :class:`PerronEstimate` when ``full_output`` is set.
    Raises :class:`ConvergenceError` carrying the best bracket when neither
    route meets ``tol``.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if np.any(M < 0):
        raise ValueError("spectral_radius expects a nonnegative matrix")
    n = M.shape[0]
    if n == 0:
        raise ValueError("empty matrix")

    A = M + np.eye(n)
    x = np.ones(n)
    lo, hi = 0.0, float(np.abs(M).sum(axis=1).max())
    # The Gelfand fallback is cheap, so a stuck bracket is abandoned early
    # rather than burning the whole max_iter budget.
    budget = min(max_iter, 5000)
    widths = []
    it = 0
    for it in range(1, budget + 1):
        y = A @ x
        ratios = y / x
        lo = max(lo, float(ratios.min()) - 1.0)
        hi = min(hi, float(ratios.max()) - 1.0)
        if hi - lo <= 2 * tol:
            est = PerronEstimate(0.5 * (lo + hi), lo, hi, it, "power", True)
            return est if full_output else est.value
        x = y / y.max()
        widths.append(hi - lo)
        if it > 200 and widths[-1] > 0.99 * widths[-101]:
            break

    squarings = min(64, max_iter)
    g, j, ok = _gelfand(M, tol * 0.1, squarings, min(40, squarings - 1))
    upper = min(hi, g)
    if ok and g >= lo - tol:
        est = PerronEstimate(float(max(g, lo)), lo, upper, it + j, "gelfand", True)
        return est if full_output else est.value
    raise ConvergenceError(
        f"spectral radius did not converge to tol={tol:g}; "
        f"bracket [{lo!r}, {upper!r}]",
        bracket=(lo, upper),
    )


def stationary(F, tol=1e-12, max_iter=64) -> np.ndarray:
    """``lim F**k`` by repeated squaring.

    A squaring sequence ``F**(2**j)`` also settles for periodic chains (for a
    period-2 permutation every even power is the identity), so a settled
    candidate ``P`` must additionally satisfy ``F @ P == P``; if it does not,
    the chain oscillates.
    """
    F = as_row_stochastic(F)
    P = F.copy()
    check = max(100 * tol, 1e-9)
    for _ in range(max_iter):
        Q = P @ P
        if np.abs(Q - P).max() < tol:
            if np.abs(F @ Q - Q).max() > check:
                raise StationaryError(
                    "powers of F oscillate (periodic chain); no limit exists",
                    kind="oscillation",
                )
            return as_row_stochastic(Q, tol=max(tol, 1e-10))
        P = Q
    if np.abs(F @ P - P).max() > 0.1:
        kind, what = "oscillation", "powers of F oscillate"
    else:
        kind, what = "slow", "powers of F converge too slowly"
    raise StationaryError(f"{what}: no limit after 2**{max_iter} steps", kind=kind)


def split_leader_blocks(F_ordered, m):
    """Return ``(X, Y)``: followers' weights on leaders and on followers."""
    F_ordered = np.asarray(F_ordered, dtype=float)
    return F_ordered[m:, :m], F_ordered[m:, m:]


def stationary_closed_form(F_ordered, m) -> np.ndarray:
    """Stationary form of a leader-first matrix ``[[I, 0], [X, Y]]``.

    Followers converge to ``R = (I - Y)^{-1} X`` applied to the leaders; the
    follower-on-follower block of the limit is zero.
    """
    F = as_row_stochastic(F_ordered)
    n = F.shape[0]
    if not 1 <= m <= n:
        raise ValueError(f"leader count m={m} outside [1, {n}]")
    if not np.allclose(F[:m], np.eye(n)[:m], rtol=0, atol=STOCHASTIC_TOL):
        raise StructureError(f"first {m} rows are not identity rows")
    out = np.zeros((n, n))
    out[:m, :m] = np.eye(m)
    if m < n:
        X, Y = split_leader_blocks(F, m)
        IY = np.eye(n - m) - Y
        # 1-norm condition estimate; singular means some follower class
        # receives no leader influence.
        try:
            singular = np.linalg.cond(IY, 1) > 1e14
            if not singular:
                out[m:, :m] = np.linalg.solve(IY, X)
        except np.linalg.LinAlgError:
            singular = True
        if singular:
            raise StructureError(
                "I - Y is singular: some followers are not influenced by any leader"
            )
    return as_row_stochastic(out, tol=1e-10)


@dataclass(frozen=True)
class ConsensusWeights:
    mu: np.ndarray

    def predict(self, x0) -> float:
        return float(self.mu @ np.asarray(x0, dtype=float))


def consensus_weights(F, tol=1e-10) -> ConsensusWeights:
    Fs = stationary(F)
    spread = np.abs(Fs - Fs[0]).max()
    if spread > tol:
        raise StructureError(
            f"no rank-one stationary form: rows of lim F**k differ by {spread:.3g}"
        )
    mu = Fs[0].copy()
    mu.setflags(write=False)
    return ConsensusWeights(mu)


def async_margin(F, tol=1e-10) -> float:
    """``rho(|F - F*|)``; asynchronous consensus is reachable when below 1."""
    F = as_row_stochastic(F)
    try:
        Fs = stationary(F)
    except StationaryError:
        from .topology import classify_roots, reorder_leaders_first

        structure = classify_roots(F)
        if not structure.is_m_rooted_leader_form:
            raise
        perm, Fo = reorder_leaders_first(F)
        inv = np.argsort(perm)
        Fs = stationary_closed_form(Fo, structure.m)[np.ix_(inv, inv)]
    return spectral_radius(np.abs(F - Fs), tol=tol)


def matvec_exact(M, v) -> np.ndarray:
    """``M @ v`` with every row reduced by ``math.fsum``.

    Each entry is the correctly rounded sum of the rounded products, so the
    result does not depend on summation order, zero padding, or the BLAS
    build. This is what lets the per-agent asynchronous update and the
    augmented switched-system product agree bit for bit.
    """
    terms = np.asarray(M, dtype=float) * np.asarray(v, dtype=float)
    return np.array([math.fsum(row) for row in terms])
