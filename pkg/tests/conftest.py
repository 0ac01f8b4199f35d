"""Shared builders for the test suite.

Everything here is deterministic: random objects take an explicit numpy
Generator so each test controls (and freezes) its own stream.
"""

import numpy as np
import pytest

from bellqma import ConstraintGraph, Edge, ProofState


def random_state(n: int, K: int, rng: np.random.Generator) -> ProofState:
    """A Haar-ish random proof state (complex normal, normalized)."""
    amps = rng.normal(size=n * K) + 1j * rng.normal(size=n * K)
    return ProofState(n, K, amps / np.linalg.norm(amps))


def basis_state(n: int, K: int, v: int, c: int) -> ProofState:
    amps = np.zeros(n * K, dtype=complex)
    amps[v * K + c] = 1.0
    return ProofState(n, K, amps)


def neq_relation(K: int) -> np.ndarray:
    return (~np.eye(K, dtype=bool)).astype(np.uint8)


def eq_relation(K: int) -> np.ndarray:
    return np.eye(K, dtype=np.uint8)


def eq_square() -> ConstraintGraph:
    """4-cycle with equality constraints: satisfied by any constant coloring."""
    rel = eq_relation(2)
    edges = tuple(Edge(i, (i + 1) % 4, rel) for i in range(4))
    return ConstraintGraph(4, 2, edges, degree=2)


def single_edge_instance(n: int, K: int) -> ConstraintGraph:
    """Minimal valid instance (one always-satisfied edge); used where only
    the register dimensions matter."""
    return ConstraintGraph(n, K, (Edge(0, min(1, n - 1), np.ones((K, K), np.uint8)),))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20250814)
