"""2-CSP constraint graphs over ``n`` vertices and ``K`` colors.

A constraint is an ordered edge ``(u, v)`` carrying a dense K-by-K 0/1
relation table: ``relation[a][b] == 1`` iff coloring ``u`` with ``a`` and
``v`` with ``b`` satisfies the constraint.  Parallel edges and self-loops
are allowed and each stored edge record counts once.  All satisfied
fractions and gap certificates use exact rational arithmetic.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .rng import generator

DEFAULT_GAP_BUDGET = 1 << 20

__all__ = [
    "ConstraintGraph",
    "Diagnostic",
    "Edge",
    "GapCertificate",
    "certify_gap",
    "check_coloring",
    "clique_neq",
    "generate",
    "graph_from_dict",
    "graph_to_dict",
    "instance_digest",
    "load_graph",
    "odd_cycle_neq",
    "planted_satisfiable",
    "random_regular",
    "satisfied_fraction",
    "save_graph",
    "validate",
    "violation_tables",
]


def _frozen(arr, dtype) -> np.ndarray:
    out = np.array(arr, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Edge:
    """One constraint: ordered endpoints plus its 0/1 relation table."""

    u: int
    v: int
    relation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "relation", _frozen(self.relation, np.uint8))


@dataclass(frozen=True, eq=False)
class ConstraintGraph:
    """Immutable 2-CSP instance; ``degree`` is an optional declared regularity."""

    n: int
    K: int
    edges: tuple[Edge, ...]
    degree: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(self.edges))

    def incidence_counts(self) -> np.ndarray:
        """Edge-incidences per vertex; a self-loop counts once."""
        counts = np.zeros(self.n, dtype=np.int64)
        for e in self.edges:
            if 0 <= e.u < self.n:
                counts[e.u] += 1
            if e.v != e.u and 0 <= e.v < self.n:
                counts[e.v] += 1
        return counts


@dataclass(frozen=True)
class Diagnostic:
    """One violated invariant, naming the offending index where applicable."""

    invariant: str
    index: int | None
    message: str

    def __str__(self):
        where = "" if self.index is None else f" [index {self.index}]"
        return f"{self.invariant}{where}: {self.message}"


@dataclass(frozen=True)
class GapCertificate:
    """Best satisfied fraction found, its witness, and whether the search
    enumerated every coloring."""

    max_satisfied_fraction: Fraction
    eta: Fraction
    witness: tuple[int, ...]
    exhaustive: bool


def validate(graph: ConstraintGraph) -> list[Diagnostic]:
    """Check every structural invariant; empty result means a valid graph."""
    out: list[Diagnostic] = []
    if graph.n < 1:
        out.append(Diagnostic("vertex_count", None, f"n must be >= 1, got {graph.n}"))
    if graph.K < 1:
        out.append(Diagnostic("color_count", None, f"K must be >= 1, got {graph.K}"))
    if not graph.edges:
        out.append(Diagnostic("edge_list_empty", None, "graph has no edges"))
    for i, e in enumerate(graph.edges):
        if not (0 <= e.u < graph.n and 0 <= e.v < graph.n):
            out.append(
                Diagnostic("endpoint_range", i, f"edge ({e.u}, {e.v}) outside [0, {graph.n})")
            )
        if e.relation.shape != (graph.K, graph.K):
            out.append(
                Diagnostic(
                    "relation_shape",
                    i,
                    f"relation table is {e.relation.shape}, expected {(graph.K, graph.K)}",
                )
            )
        elif not np.isin(e.relation, (0, 1)).all():
            out.append(Diagnostic("relation_values", i, "relation entries must be 0 or 1"))
    if graph.degree is not None and not any(d.invariant == "endpoint_range" for d in out):
        counts = graph.incidence_counts()
        for v in np.flatnonzero(counts != graph.degree):
            out.append(
                Diagnostic(
                    "regularity",
                    int(v),
                    f"vertex {v} has incidence {counts[v]}, declared degree {graph.degree}",
                )
            )
    return out


def check_coloring(graph: ConstraintGraph, coloring: Sequence[int]) -> np.ndarray:
    """Return the coloring as an int array, or raise on dimension/range errors."""
    col = np.asarray(coloring, dtype=np.int64)
    if col.shape != (graph.n,):
        raise ValueError(f"coloring has shape {col.shape}, expected ({graph.n},)")
    if col.size and (col.min() < 0 or col.max() >= graph.K):
        raise ValueError(f"coloring entries must lie in [0, {graph.K})")
    return col


def satisfied_fraction(graph: ConstraintGraph, coloring: Sequence[int]) -> Fraction:
    """Exact fraction of edge records satisfied by ``coloring``."""
    col = check_coloring(graph, coloring)
    hits = sum(int(e.relation[col[e.u], col[e.v]]) for e in graph.edges)
    return Fraction(hits, len(graph.edges))


def _decode_colorings(indices: np.ndarray, n: int, K: int) -> np.ndarray:
    """Mixed-radix decode; vertex 0 is the most significant digit, so
    ascending indices enumerate colorings in lexicographic order."""
    cols = np.empty((indices.size, n), dtype=np.int64)
    rem = indices.copy()
    for j in range(n - 1, -1, -1):
        cols[:, j] = rem % K
        rem //= K
    return cols


def certify_gap(graph: ConstraintGraph, budget: int = DEFAULT_GAP_BUDGET) -> GapCertificate:
    """Maximize the satisfied fraction by enumeration.

    Enumerates all K**n colorings when that fits in ``budget``, otherwise
    the first ``budget`` colorings in lexicographic order (exhaustive=False).
    Ties go to the lexicographically smallest witness.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    total = graph.K ** graph.n
    limit = min(total, budget)
    exhaustive = total <= budget
    num_edges = len(graph.edges)
    best_hits = -1
    best: np.ndarray | None = None
    chunk = 1 << 14
    for start in range(0, limit, chunk):
        idx = np.arange(start, min(start + chunk, limit), dtype=np.int64)
        cols = _decode_colorings(idx, graph.n, graph.K)
        hits = np.zeros(idx.size, dtype=np.int64)
        for e in graph.edges:
            hits += e.relation[cols[:, e.u], cols[:, e.v]]
        top = int(hits.argmax())  # first maximum = lexicographically smallest
        if hits[top] > best_hits:
            best_hits = int(hits[top])
            best = cols[top].copy()
        if best_hits == num_edges:
            break
    assert best is not None
    frac = Fraction(best_hits, num_edges)
    return GapCertificate(frac, 1 - frac, tuple(int(c) for c in best), exhaustive)


def violation_tables(graph: ConstraintGraph) -> np.ndarray:
    """Pairwise-violation lookup over flat outcomes ``v * K + c``.

    ``table[x1, x2]`` is 1 when the ordered measured pair violates some
    stored edge (checked in both orientations, self-loops included),
    2 when the vertices coincide with different colors, else 0.  Edge
    violations take precedence within a pair.
    """
    n, K = graph.n, graph.K
    edge_bad = np.zeros((n * K, n * K), dtype=bool)
    for e in graph.edges:
        bad = e.relation == 0
        edge_bad[e.u * K:(e.u + 1) * K, e.v * K:(e.v + 1) * K] |= bad
        edge_bad[e.v * K:(e.v + 1) * K, e.u * K:(e.u + 1) * K] |= bad.T
    mismatch = np.zeros_like(edge_bad)
    off_diag = ~np.eye(K, dtype=bool)
    for v in range(n):
        mismatch[v * K:(v + 1) * K, v * K:(v + 1) * K] = off_diag
    return np.where(edge_bad, 1, np.where(mismatch, 2, 0)).astype(np.uint8)


# ---------------------------------------------------------------------------
# Generators


def _neq_relation(K: int) -> np.ndarray:
    return (~np.eye(K, dtype=bool)).astype(np.uint8)


def _circulant_edges(n: int, d: int, rng: np.random.Generator,
                     relation_for: "callable") -> list[Edge]:
    """d-regular edge list from random circulant offsets.

    Even d uses d/2 distinct offsets in [1, (n-1)//2]; odd d additionally
    places a self-loop at every vertex (a loop counts once toward the
    degree).  Offsets stay below n/2 so no pair is generated twice.
    """
    loops = d % 2 == 1
    num_offsets = d // 2
    max_offset = (n - 1) // 2
    if num_offsets > max_offset:
        raise ValueError(f"cannot build a {d}-regular circulant on {n} vertices")
    offsets = sorted(rng.choice(np.arange(1, max_offset + 1), size=num_offsets,
                                replace=False)) if num_offsets else []
    edges = []
    if loops:
        for v in range(n):
            edges.append(Edge(v, v, relation_for(v, v)))
    for s in offsets:
        for v in range(n):
            edges.append(Edge(v, (v + int(s)) % n, relation_for(v, (v + int(s)) % n)))
    return edges


def planted_satisfiable(n: int, K: int, d: int, seed: int) -> tuple[ConstraintGraph, tuple[int, ...]]:
    """Random d-regular instance with a hidden satisfying coloring.

    Relation tables are uniform 0/1 except that the planted pair is forced
    to 1, so the planted coloring satisfies every edge.
    """
    if n < 2 or K < 1 or d < 1:
        raise ValueError("planted_satisfiable needs n >= 2, K >= 1, d >= 1")
    rng = generator(seed, 0)
    planted = rng.integers(0, K, size=n)

    def relation_for(u, v):
        rel = rng.integers(0, 2, size=(K, K), dtype=np.uint8)
        rel[planted[u], planted[v]] = 1
        return rel

    edges = _circulant_edges(n, d, rng, relation_for)
    graph = ConstraintGraph(n, K, tuple(edges), degree=d)
    return graph, tuple(int(c) for c in planted)


def random_regular(n: int, K: int, d: int, seed: int) -> tuple[ConstraintGraph, None]:
    """Random d-regular instance with unconstrained uniform relation tables."""
    if n < 2 or K < 1 or d < 1:
        raise ValueError("random_regular needs n >= 2, K >= 1, d >= 1")
    rng = generator(seed, 0)

    def relation_for(u, v):
        return rng.integers(0, 2, size=(K, K), dtype=np.uint8)

    edges = _circulant_edges(n, d, rng, relation_for)
    return ConstraintGraph(n, K, tuple(edges), degree=d), None


def odd_cycle_neq(n: int) -> tuple[ConstraintGraph, None]:
    """Odd cycle with the inequality relation over two colors (unsatisfiable,
    best coloring misses exactly one edge)."""
    if n < 3 or n % 2 == 0:
        raise ValueError("odd_cycle_neq needs odd n >= 3")
    rel = _neq_relation(2)
    edges = tuple(Edge(i, (i + 1) % n, rel) for i in range(n))
    return ConstraintGraph(n, 2, edges, degree=2), None


def clique_neq(n: int, K: int) -> tuple[ConstraintGraph, None]:
    """Complete graph with the inequality relation on K < n colors
    (unsatisfiable by pigeonhole)."""
    if not 1 <= K < n:
        raise ValueError("clique_neq needs 1 <= K < n")
    rel = _neq_relation(K)
    edges = tuple(Edge(i, j, rel) for i in range(n) for j in range(i + 1, n))
    return ConstraintGraph(n, K, edges, degree=n - 1), None


_GENERATORS = {
    "planted_satisfiable": planted_satisfiable,
    "random_regular": random_regular,
    "odd_cycle_neq": odd_cycle_neq,
    "clique_neq": clique_neq,
}


def generate(kind: str, params: Mapping, seed: int = 0):
    """Dispatch to a named generator; returns (graph, planted coloring or None)."""
    if kind not in _GENERATORS:
        raise ValueError(f"unknown generator kind {kind!r}; known: {sorted(_GENERATORS)}")
    fn = _GENERATORS[kind]
    kwargs = dict(params)
    if kind in ("planted_satisfiable", "random_regular"):
        kwargs["seed"] = seed
    return fn(**kwargs)


# ---------------------------------------------------------------------------
# File format


def graph_to_dict(graph: ConstraintGraph,
                  colorings: Mapping[str, Sequence[int]] | None = None) -> dict:
    doc = {
        "n": graph.n,
        "K": graph.K,
        "edges": [
            {"u": e.u, "v": e.v, "relation": e.relation.astype(int).tolist()}
            for e in graph.edges
        ],
    }
    if graph.degree is not None:
        doc["d"] = graph.degree
    if colorings:
        doc["colorings"] = {name: [int(c) for c in col] for name, col in colorings.items()}
    return doc


def graph_from_dict(doc: Mapping) -> tuple[ConstraintGraph, dict[str, tuple[int, ...]]]:
    for field in ("n", "K", "edges"):
        if field not in doc:
            raise ValueError(f"graph document missing required field {field!r}")
    edges = []
    for i, rec in enumerate(doc["edges"]):
        try:
            edges.append(Edge(int(rec["u"]), int(rec["v"]), np.asarray(rec["relation"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed edge record at index {i}: {exc}") from exc
    graph = ConstraintGraph(int(doc["n"]), int(doc["K"]), tuple(edges),
                            degree=int(doc["d"]) if "d" in doc else None)
    named = {
        str(name): tuple(int(c) for c in col)
        for name, col in dict(doc.get("colorings", {})).items()
    }
    return graph, named


def save_graph(path, graph: ConstraintGraph,
               colorings: Mapping[str, Sequence[int]] | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(graph_to_dict(graph, colorings), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_graph(path) -> tuple[ConstraintGraph, dict[str, tuple[int, ...]]]:
    with open(path, "r", encoding="utf-8") as fh:
        return graph_from_dict(json.load(fh))


def instance_digest(graph: ConstraintGraph) -> str:
    """Short content hash identifying the constraints (colorings excluded)."""
    doc = graph_to_dict(graph)
    doc.pop("colorings", None)
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:12]
