"""Synchronous and bounded-delay asynchronous consensus iterations.

Every agent updates at every global step; asynchrony lives entirely in stale
reads. At step ``k`` agent ``i`` reads neighbour ``j`` as it was at step
``k - d_ij``, with states before step 0 equal to ``x0``. Each agent's new
value is an exactly rounded sum (``math.fsum``) of its weighted reads, so a
run is bit-reproducible and matches the augmented switched-system product
exactly.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .rng import BoundedStream, sample_seed
from .stochastic import as_row_stochastic, matvec_exact
from .switched import DelayAssignment, delay_pairs

CONSENSUS_TOL = 1e-8
DELAY_KINDS = ("none", "uniform", "fixed", "shared")


@dataclass(frozen=True)
class DelayModel:
    """Distribution of link delays.

    kind
        ``"none"``: synchronous, every delay is 0.
        ``"uniform"``: each link draws its delay uniformly from
        ``{0, ..., tau_d}`` independently at every step.
        ``"fixed"``: one assignment used at every step; ``assignment`` if
        given, otherwise a single uniform draw from ``seed``.
        ``"shared"``: each step every *source* agent ``j`` draws one delay
        that all of its receivers see.
    """

    kind: str = "uniform"
    tau_d: int = 0
    seed: int = 0
    assignment: Optional[DelayAssignment] = None

    def __post_init__(self):
        if self.kind not in DELAY_KINDS:
            raise ValueError(f"unknown delay kind {self.kind!r}; expected one of {DELAY_KINDS}")
        if self.tau_d < 0:
            raise ValueError("tau_d must be nonnegative")
        if self.assignment is not None and self.kind != "fixed":
            raise ValueError("an explicit assignment requires kind='fixed'")

    @property
    def effective_tau_d(self) -> int:
        return 0 if self.kind == "none" else self.tau_d

    def with_seed(self, seed: int) -> "DelayModel":
        return replace(self, seed=seed)

    def draws(self, F, steps: int) -> np.ndarray:
        """Delays per step and link, shape ``(steps, len(delay_pairs(F)))``."""
        pairs = delay_pairs(F)
        E = len(pairs)
        if self.kind == "none" or self.tau_d == 0 and self.kind != "fixed":
            return np.zeros((steps, E), dtype=np.int64)
        bound = self.tau_d + 1
        if self.kind == "fixed":
            if self.assignment is not None:
                a = self.assignment
                if set(a.delays) != set(pairs) or a.tau_d != self.tau_d:
                    raise ValueError("fixed assignment does not match F's links or tau_d")
                row = np.array([a.delays[p] for p in pairs], dtype=np.int64)
            else:
                row = BoundedStream(self.seed).integers(bound, E)
            return np.tile(row, (steps, 1))
        stream = BoundedStream(self.seed)
        if self.kind == "uniform":
            return stream.integers(bound, steps * E).reshape(steps, E)
        n = np.asarray(F).shape[0]
        per_source = stream.integers(bound, steps * n).reshape(steps, n)
        src = np.array([j for _, j in pairs], dtype=np.int64)
        return per_source[:, src] if E else np.zeros((steps, 0), dtype=np.int64)

    def assignments(self, F, steps: int):
        pairs = delay_pairs(F)
        tau = self.effective_tau_d
        return [DelayAssignment.from_sequence(pairs, row, tau) for row in self.draws(F, steps)]


@dataclass(frozen=True)
class Consensus:
    step: int
    value: float
    spread: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    states: np.ndarray
    consensus: Optional[Consensus]
    norm_track: np.ndarray
    delays: Optional[np.ndarray] = None

    @property
    def steps(self) -> int:
        return self.states.shape[0] - 1


def detect_consensus(states, ctol=CONSENSUS_TOL) -> Optional[Consensus]:
    """First step whose max - min spread is below ``ctol``."""
    if isinstance(states, Trajectory):
        states = states.states
    states = np.asarray(states, dtype=float)
    spread = np.ptp(states, axis=1)
    hits = np.flatnonzero(spread < ctol)
    if not len(hits):
        return None
    k = int(hits[0])
    x = states[k]
    return Consensus(k, math.fsum(x) / len(x), float(spread[k]))


def _finish(states, ctol, delays=None):
    states.setflags(write=False)
    norms = np.linalg.norm(states, axis=1)
    return Trajectory(states, detect_consensus(states, ctol), norms, delays)


def _check(F, x0, steps):
    F = as_row_stochastic(F)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (F.shape[0],):
        raise ValueError(f"x0 has shape {x0.shape}, expected ({F.shape[0]},)")
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    return F, x0


def run_sync(F, x0, steps, ctol=CONSENSUS_TOL) -> Trajectory:
    F, x0 = _check(F, x0, steps)
    states = np.empty((steps + 1, len(x0)))
    states[0] = x0
    for k in range(steps):
        states[k + 1] = matvec_exact(F, states[k])
    return _finish(states, ctol)


def run_async_with_delays(F, x0, delays, ctol=CONSENSUS_TOL) -> Trajectory:
    """Asynchronous run driven by an explicit ``(steps, links)`` delay array."""
    delays = np.asarray(delays, dtype=np.int64)
    steps = delays.shape[0]
    F, x0 = _check(F, x0, steps)
    n = len(x0)
    pairs = delay_pairs(F)
    rows = np.array([i for i, _ in pairs], dtype=np.int64)
    cols = np.array([j for _, j in pairs], dtype=np.int64)
    if delays.shape[1:] != (len(pairs),):
        raise ValueError(f"delays must have shape (steps, {len(pairs)})")
    if np.any(delays < 0):
        raise ValueError("negative delay")
    weights = F[rows, cols]
    diag = np.arange(n)
    self_w = F[diag, diag]

    states = np.empty((steps + 1, n))
    states[0] = x0
    terms = np.zeros((n, n))
    for k in range(steps):
        src = np.maximum(k - delays[k], 0)
        terms[diag, diag] = self_w * states[k]
        terms[rows, cols] = weights * states[src, cols]
        states[k + 1] = [math.fsum(r) for r in terms]
    return _finish(states, ctol, delays)


def run_async(F, x0, dm: DelayModel, steps, ctol=CONSENSUS_TOL) -> Trajectory:
    return run_async_with_delays(F, x0, dm.draws(F, steps), ctol)


@dataclass(frozen=True, eq=False)
class EnsembleSummary:
    seeds: tuple
    values: np.ndarray
    consensus_steps: np.ndarray
    norm_tracks: np.ndarray
    mean: float
    std: float
    min: float
    max: float
    non_converged: int
    master_seed: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def samples(self) -> int:
        return len(self.seeds)

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "master_seed": self.master_seed,
            "converged": self.samples - self.non_converged,
            "non_converged": self.non_converged,
            "mean": self.mean,
            "std": self.std,
            "min": self.min,
            "max": self.max,
        }


def _one_sample(args):
    F, x0, dm, steps, ctol = args
    t = run_async(F, x0, dm, steps, ctol)
    c = t.consensus
    return (c.value if c else math.nan), (c.step if c else -1), t.norm_track


def _summarize(values):
    ok = values[~np.isnan(values)]
    if not len(ok):
        return math.nan, math.nan, math.nan, math.nan
    mean = math.fsum(ok) / len(ok)
    std = math.sqrt(math.fsum((ok - mean) ** 2) / (len(ok) - 1)) if len(ok) > 1 else 0.0
    return mean, std, float(ok.min()), float(ok.max())


def monte_carlo(
    F, x0, dm_template: DelayModel, samples, steps, ctol=CONSENSUS_TOL, workers=None
) -> EnsembleSummary:
    """Ensemble of :func:`run_async` runs.

    Sample ``s`` uses seed ``mix64(master ^ s)`` where ``master`` is
    ``dm_template.seed``. Results are gathered by sample index, so the summary
    is the same whether or not ``workers`` runs samples in parallel.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    F, x0 = _check(F, x0, steps)
    seeds = tuple(sample_seed(dm_template.seed, s) for s in range(samples))
    jobs = [(F, x0, dm_template.with_seed(sd), steps, ctol) for sd in seeds]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one_sample, jobs))
    else:
        results = [_one_sample(j) for j in jobs]
    values = np.array([r[0] for r in results])
    ksteps = np.array([r[1] for r in results], dtype=np.int64)
    tracks = np.stack([r[2] for r in results])
    mean, std, lo, hi = _summarize(values)
    return EnsembleSummary(
        seeds, values, ksteps, tracks, mean, std, lo, hi,
        int(np.isnan(values).sum()), dm_template.seed,
    )
