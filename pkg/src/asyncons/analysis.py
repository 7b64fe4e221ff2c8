"""Convergence verdicts for synchronous vs. asynchronous consensus."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import switched
from .exceptions import ConvergenceError, StationaryError, StructureError
from .sim import DelayModel, EnsembleSummary
from .stochastic import (
    as_row_stochastic,
    consensus_weights,
    spectral_radius,
    stationary,
    stationary_closed_form,
)
from .topology import classify_roots, reorder_leaders_first

AGREEMENT_TOL = 1e-6
EXHAUSTIVE_CAP = 2**21
DISTINCT_CAP = 4096


@dataclass
class ConvergenceReport:
    leaders: tuple
    m: int
    has_spanning_tree: bool
    is_m_rooted_leader_form: bool
    rho_margin: Optional[float]
    async_reachable: bool
    theorem1_applies: bool
    rho_F: Optional[float] = None
    mu: Optional[np.ndarray] = None
    stationary: Optional[np.ndarray] = None
    predicted_sync_value: Optional[float] = None
    predicted_limits: Optional[np.ndarray] = None
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        """JSON-ready dict. Agent numbers in ``leaders`` are 1-based."""

        def arr(a):
            return None if a is None else [float(v) for v in np.ravel(a)]

        return {
            "n": None if self.stationary is None else int(self.stationary.shape[0]),
            "leaders": [i + 1 for i in self.leaders],
            "m": self.m,
            "has_spanning_tree": self.has_spanning_tree,
            "is_m_rooted_leader_form": self.is_m_rooted_leader_form,
            "rho_margin": self.rho_margin,
            "async_reachable": self.async_reachable,
            "theorem1_applies": self.theorem1_applies,
            "rho_F": self.rho_F,
            "mu": arr(self.mu),
            "stationary": None if self.stationary is None
            else [arr(r) for r in self.stationary],
            "predicted_sync_value": self.predicted_sync_value,
            "predicted_limits": arr(self.predicted_limits),
            "notes": list(self.notes),
        }


def stationary_form(F, structure=None):
    """``lim F**k``, falling back to the leader closed form when needed."""
    F = as_row_stochastic(F)
    try:
        return stationary(F)
    except StationaryError:
        structure = structure or classify_roots(F)
        if not structure.is_m_rooted_leader_form:
            raise
    perm, Fo = reorder_leaders_first(F)
    inv = np.argsort(perm)
    return stationary_closed_form(Fo, structure.m)[np.ix_(inv, inv)]


def analyze(F, x0=None) -> ConvergenceReport:
    """Best-effort verdict bundle; numeric failures end up in ``notes``."""
    F = as_row_stochastic(F)
    n = F.shape[0]
    s = classify_roots(F)
    notes = []
    report = ConvergenceReport(
        leaders=s.leaders,
        m=s.m,
        has_spanning_tree=s.has_spanning_tree,
        is_m_rooted_leader_form=s.is_m_rooted_leader_form,
        rho_margin=None,
        async_reachable=False,
        theorem1_applies=False,
        notes=notes,
    )
    try:
        report.rho_F = spectral_radius(F)
    except ConvergenceError as exc:
        notes.append(f"rho(F) unavailable: {exc}")

    if s.leaders and not s.is_m_rooted_leader_form:
        notes.append("leaders exist but some followers receive no leader influence")
    if not s.leaders:
        notes.append("no leader rows; the leader condition for order-independent "
                     "asynchronous limits does not hold")

    try:
        Fs = stationary_form(F, s)
    except (StationaryError, StructureError) as exc:
        notes.append(f"stationary form unavailable: {exc}")
        return report
    report.stationary = Fs

    try:
        report.rho_margin = spectral_radius(np.abs(F - Fs))
    except ConvergenceError as exc:
        notes.append(f"rho(|F - F*|) unavailable: {exc}")
        return report
    report.async_reachable = bool(report.rho_margin < 1)
    report.theorem1_applies = bool(s.is_m_rooted_leader_form and report.async_reachable)
    if not report.async_reachable:
        notes.append(f"rho(|F - F*|) = {report.rho_margin:.6g} >= 1: "
                     "asynchronous consensus not certified")
    if s.is_m_rooted_leader_form and not report.async_reachable:
        notes.append("leader structure present but the margin condition fails")

    if np.abs(Fs - Fs[0]).max() <= 1e-10:
        report.mu = consensus_weights(F).mu
    elif s.m > 1:
        notes.append(f"{s.m} leaders: limits are leader-determined, not rank-one")

    if x0 is not None:
        x0 = np.asarray(x0, dtype=float)
        if x0.shape != (n,):
            raise ValueError(f"x0 has shape {x0.shape}, expected ({n},)")
        limits = Fs @ x0
        report.predicted_limits = limits
        if report.mu is not None:
            report.predicted_sync_value = float(report.mu @ x0)
        elif np.ptp(limits) <= 1e-10:
            report.predicted_sync_value = math.fsum(limits) / n
        else:
            notes.append("leaders start at different values: this is a fixed-point "
                         "problem, not consensus; predicted_limits gives each agent's limit")
    return report


@dataclass
class Theorem1Verdict:
    passed: bool
    max_deviation: float
    chains_checked: int
    exhaustive: bool
    tol: float
    counterexample: Optional[list] = None


def _all_products(mats, length):
    """Every product ``W_{s_{L-1}} ... W_{s_0}`` of ``length`` factors.

    Index ``q`` encodes the sequence in base ``len(mats)`` with the latest
    factor as the most significant digit.
    """
    N = mats.shape[1]
    out = np.eye(N)[None]
    for _ in range(length):
        out = np.einsum("wij,pjk->wpik", mats, out).reshape(-1, N, N)
    return out


def _decode(q, base, length):
    digits = []
    for _ in range(length):
        q, r = divmod(q, base)
        digits.append(r)
    return digits  # earliest step first


def _distinct_products(mats, depth, cap):
    """Distinct length-``depth`` products with one witness sequence each.

    Sequences that reach bitwise-identical partial products have identical
    extensions, so this covers every sequence exactly. Returns ``None`` once
    more than ``cap`` distinct products appear.
    """
    N = mats.shape[1]
    frontier = {np.eye(N).tobytes(): (np.eye(N), ())}
    for _ in range(depth):
        nxt = {}
        for P, seq in frontier.values():
            for w, W in enumerate(mats):
                Q = W @ P
                nxt.setdefault(Q.tobytes(), (Q, seq + (w,)))
        if len(nxt) > cap:
            return None
        frontier = nxt
    return list(frontier.values())


def verify_theorem1_empirically(
    F, tau_d, chains=100, depth=300, tol=1e-8, seed=0, exhaustive="auto"
) -> Theorem1Verdict:
    """Compare accumulated switched products against the synchronous lift.

    Every product ``W~(depth - 1) = W_{depth-1} ... W_0`` must have each block
    row within ``tol`` of ``[F*, 0, ..., 0]``. With ``exhaustive`` (or
    ``"auto"``) every switching sequence is checked, either through the set
    of distinct products when it stays small or by brute force when
    ``modes**depth`` does; otherwise ``chains`` uniformly random sequences
    drawn with ``seed``. A failure carries the offending sequence of delay
    assignments.
    """
    F = as_row_stochastic(F)
    s = classify_roots(F)
    if not s.is_m_rooted_leader_form:
        raise StructureError("the leader condition does not hold for F")
    Fs = stationary_form(F, s)
    target = switched.synchronous_lift(Fs, tau_d)
    count = switched.mode_count(F, tau_d)
    total = count**depth
    if tau_d == 0 or count == 1:
        W = switched.modal_matrix(F, switched.DelayAssignment.zeros(F, tau_d)).matrix
        P = np.linalg.matrix_power(W, depth)
        dev = float(np.abs(P - target).max())
        return Theorem1Verdict(dev <= tol, dev, 1, True, tol)

    forced = exhaustive is True
    if exhaustive == "auto":
        exhaustive = count <= DISTINCT_CAP or total <= EXHAUSTIVE_CAP
    if exhaustive:
        modes = switched.enumerate_modes(F, tau_d)
        mats = np.stack([m.matrix for m in modes])
    if exhaustive and count <= DISTINCT_CAP:
        distinct = _distinct_products(mats, depth, DISTINCT_CAP)
        if distinct is not None:
            devs = [float(np.abs(P - target).max()) for P, _ in distinct]
            i = int(np.argmax(devs))
            verdict = Theorem1Verdict(devs[i] <= tol, devs[i], int(total), True, tol)
            if not verdict.passed:
                verdict.counterexample = [dict(modes[w].assignment.delays)
                                          for w in distinct[i][1]]
            return verdict
    if exhaustive and total <= EXHAUSTIVE_CAP:
        a = depth // 2
        prefixes = _all_products(mats, a)
        suffixes = _all_products(mats, depth - a)
        worst, arg = -1.0, None
        for p, P in enumerate(prefixes):
            dev = np.abs(suffixes @ P - target).max(axis=(1, 2))
            q = int(np.argmax(dev))
            if dev[q] > worst:
                worst, arg = float(dev[q]), (q, p)
        verdict = Theorem1Verdict(worst <= tol, worst, int(total), True, tol)
        if not verdict.passed:
            q, p = arg
            seq = _decode(p, count, a) + _decode(q, count, depth - a)
            verdict.counterexample = [dict(modes[i].assignment.delays) for i in seq]
        return verdict
    if forced:
        raise ValueError(f"{total} switching sequences exceed the exhaustive cap")

    worst, bad = -1.0, None
    for c in range(chains):
        dm = DelayModel("uniform", tau_d, seed=(seed + c) & ((1 << 64) - 1))
        assignments = dm.assignments(F, depth)
        P = switched.chain([switched.modal_matrix(F, d) for d in assignments])
        dev = float(np.abs(P - target).max())
        if dev > worst:
            worst, bad = dev, assignments
    verdict = Theorem1Verdict(worst <= tol, worst, chains, False, tol)
    if not verdict.passed:
        verdict.counterexample = [dict(d.delays) for d in bad]
    return verdict


def discrepancy_report(sync_value, ensemble: EnsembleSummary, bins=20,
                       within=AGREEMENT_TOL) -> dict:
    values = np.asarray(ensemble.values, dtype=float)
    if not len(values):
        raise ValueError("empty ensemble")
    ok = values[~np.isnan(values)]
    dev = np.abs(ok - sync_value)
    if len(ok):
        lo, hi = float(ok.min()), float(ok.max())
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
        counts, edges = np.histogram(ok, bins=bins, range=(lo, hi))
    else:
        counts, edges = np.zeros(0, dtype=int), np.zeros(0)
    return {
        "sync_value": float(sync_value),
        "samples": int(len(values)),
        "converged": int(len(ok)),
        "max_abs_deviation": float(dev.max()) if len(ok) else None,
        "std": ensemble.std,
        "fraction_within": float(np.mean(dev <= within)) if len(ok) else 0.0,
        "within_tol": within,
        "histogram": {
            "edges": [float(e) for e in edges],
            "counts": [int(c) for c in counts],
        },
    }


def probe_leaderless_agreement(n, trials, samples=20, tau_d=2, steps=2000,
                               seed=0, density=0.6, tol=AGREEMENT_TOL):
    """Search random leaderless topologies whose async ensembles match sync.

    Returns the matrices (and spreads) for which every sampled asynchronous
    consensus value agreed with the synchronous one within ``tol``. An empty
    result is consistent with the leader condition being necessary; a
    non-empty one is a candidate counterexample to that conjecture. Neither
    outcome is a proof.
    """
    from .sim import monte_carlo, run_sync

    rng = np.random.default_rng(seed)
    found = []
    for t in range(trials):
        A = rng.random((n, n)) * (rng.random((n, n)) < density)
        A[np.arange(n), np.arange(n)] += rng.random(n) + 0.05
        F = A / A.sum(axis=1, keepdims=True)
        s = classify_roots(F)
        if s.leaders or not s.has_spanning_tree:
            continue
        x0 = rng.normal(size=n)
        sync = run_sync(F, x0, steps).consensus
        if sync is None:
            continue
        ens = monte_carlo(F, x0, DelayModel("uniform", tau_d, seed + t), samples, steps)
        if ens.non_converged:
            continue
        spread = float(np.abs(ens.values - sync.value).max())
        if spread <= tol:
            found.append((F, spread))
    return found
