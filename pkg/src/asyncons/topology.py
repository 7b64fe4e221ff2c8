"""Directed weighted interaction topologies.

Convention: ``weights[i, j]`` is the weight agent ``i`` places on agent
``j``'s state. Information therefore flows ``j -> i`` whenever
``weights[i, j] > 0`` and ``i != j``; this *influence digraph* is what
reachability, leaders and spanning trees are defined on. Agent indices are
0-based throughout the library.
"""

from __future__ import annotations

import json
import re
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import StructureError, TopologyError
from .stochastic import as_row_stochastic

LEADER_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DirectedTopology:
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise TopologyError(f"weights must be square, got shape {w.shape}")
        if w.shape[0] < 1:
            raise TopologyError("topology needs at least one agent")
        bad = np.argwhere(~np.isfinite(w) | (w < 0))
        if len(bad):
            i, j = bad[0]
            raise TopologyError(
                f"negative or non-finite weight {w[i, j]!r}", row=i + 1, col=j + 1
            )
        zero = np.flatnonzero(~(w > 0).any(axis=1))
        if len(zero):
            raise TopologyError("zero row: agent uses no information", row=zero[0] + 1)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.weights))

    def neighbors(self, i):
        """Agents ``j != i`` whose state agent ``i`` reads."""
        return [j for j in np.flatnonzero(self.weights[i]) if j != i]

    def __eq__(self, other):
        if not isinstance(other, DirectedTopology):
            return NotImplemented
        return np.array_equal(self.weights, other.weights)

    __hash__ = None


_SPLIT = re.compile(r"[,\s]+")


def _parse_rows(text):
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        row = []
        for col, tok in enumerate(t for t in _SPLIT.split(line) if t):
            try:
                row.append(float(tok))
            except ValueError:
                raise TopologyError(
                    f"malformed entry {tok!r} on line {lineno}",
                    row=len(rows) + 1,
                    col=col + 1,
                ) from None
        rows.append(row)
    return rows


def _parse_json(text):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TopologyError(f"malformed JSON: {exc}") from None
    if not isinstance(obj, dict) or "weights" not in obj:
        raise TopologyError('JSON topology must be an object with a "weights" key')
    rows = obj["weights"]
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise TopologyError('"weights" must be a list of rows')
    for i, r in enumerate(rows):
        for j, v in enumerate(r):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise TopologyError(f"non-numeric entry {v!r}", row=i + 1, col=j + 1)
    if "n" in obj and obj["n"] != len(rows):
        raise TopologyError(f'"n" is {obj["n"]} but {len(rows)} rows were given')
    return rows


def load_topology(source: str) -> DirectedTopology:
    """Parse topology text: delimited rows, or ``{"n": .., "weights": ..}``."""
    rows = _parse_json(source) if source.lstrip().startswith("{") else _parse_rows(source)
    if not rows:
        raise TopologyError("no matrix rows found")
    n = len(rows)
    for i, r in enumerate(rows):
        if len(r) != n:
            raise TopologyError(
                f"non-square matrix: {n} rows but {len(r)} entries", row=i + 1
            )
    return DirectedTopology(np.array(rows, dtype=float))


def read_topology(path) -> DirectedTopology:
    return load_topology(Path(path).read_text(encoding="utf-8"))


def dump_topology(t: DirectedTopology) -> str:
    lines = [", ".join(format(v, ".17g") for v in row) for row in t.weights]
    return "\n".join(lines) + "\n"


def write_topology(t: DirectedTopology, path) -> None:
    Path(path).write_text(dump_topology(t), encoding="utf-8")


def row_normalize(t: DirectedTopology) -> np.ndarray:
    w = t.weights
    return as_row_stochastic(w / w.sum(axis=1, keepdims=True))


def find_leaders(F, tol=LEADER_TOL) -> list[int]:
    """Indices whose row is a standard basis vector (``f_ii = 1``)."""
    F = np.asarray(F, dtype=float)
    dev = np.abs(F - np.eye(F.shape[0])).max(axis=1)
    return [int(i) for i in np.flatnonzero(dev <= tol)]


def influence_successors(F):
    """Adjacency lists of the influence digraph: ``j -> i`` iff ``f_ij > 0``."""
    F = np.asarray(F)
    n = F.shape[0]
    succ = [[] for _ in range(n)]
    for i, j in zip(*np.nonzero(F > 0)):
        if i != j:
            succ[j].append(int(i))
    return succ


def reachable_from(succ, sources):
    seen = set(sources)
    queue = deque(sources)
    while queue:
        u = queue.popleft()
        for v in succ[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


@dataclass(frozen=True)
class RootedStructure:
    leaders: tuple
    has_spanning_tree: bool
    is_m_rooted_leader_form: bool

    @property
    def m(self) -> int:
        return len(self.leaders)


def classify_roots(F) -> RootedStructure:
    F = np.asarray(F, dtype=float)
    n = F.shape[0]
    succ = influence_successors(F)
    spanning = any(len(reachable_from(succ, [r])) == n for r in range(n))
    leaders = find_leaders(F)
    leader_form = bool(leaders) and len(reachable_from(succ, leaders)) == n
    return RootedStructure(tuple(leaders), spanning, leader_form)


def reorder_leaders_first(F):
    """Permute agents so leaders come first: ``[[I, 0], [X, Y]]``.

    Returns ``(perm, F_ordered)`` with ``F_ordered = F[perm][:, perm]``;
    ``perm[new] = old``. Followers keep their relative order.
    """
    F = as_row_stochastic(F)
    s = classify_roots(F)
    if not s.leaders:
        raise StructureError("no leaders: no row of F is a standard basis vector")
    if not s.is_m_rooted_leader_form:
        raise StructureError(
            "some followers are not influenced by any leader, directly or transitively"
        )
    lead = set(s.leaders)
    perm = np.array(list(s.leaders) + [i for i in range(F.shape[0]) if i not in lead])
    return perm, as_row_stochastic(F[np.ix_(perm, perm)])
