"""Proof states on a vertex register (dimension n) and a color register
(dimension K), stored as dense complex statevectors.

The register transforms are exact unitary DFT matrix applications
(kernel ``exp(+2*pi*i*j*k/dim) / sqrt(dim)``); an optional FFT-backed
fast path must agree with the direct path to 1e-10 and is cross-checked
in the test suite.  Global phase is never compared directly - use
``fidelity`` for state equality.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

NORM_TOL = 1e-10
_NULL_EVENT = 1e-18

__all__ = [
    "MeasurementOutcome",
    "ProofState",
    "conditional_vertex_state",
    "dft_matrix",
    "fidelity",
    "fourier_color",
    "fourier_vertex",
    "honest_state",
    "measure",
    "prob_color_zero",
    "state_records",
    "vertex_marginals",
]


@dataclass(frozen=True, eq=False)
class ProofState:
    """Normalized state over the joint register; entry ``(v, c)`` lives at
    flat index ``v * K + c``."""

    n: int
    K: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.shape != (self.n * self.K,):
            raise ValueError(
                f"amplitude vector has length {amps.size}, expected n*K = {self.n * self.K}"
            )
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm!r} drifts from 1 by more than {NORM_TOL}")
        amps = amps.copy()
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def table(self) -> np.ndarray:
        """Read-only (n, K) view of the amplitudes."""
        return self.amplitudes.reshape(self.n, self.K)


@dataclass(frozen=True)
class MeasurementOutcome:
    register: str
    value: int | tuple[int, int]
    posterior: ProofState | None


@lru_cache(maxsize=16)
def dft_matrix(dim: int) -> np.ndarray:
    """Unitary DFT, ``F[j, k] = exp(2*pi*i*j*k/dim) / sqrt(dim)``."""
    j, k = np.meshgrid(np.arange(dim), np.arange(dim), indexing="ij")
    mat = np.exp(2j * np.pi * j * k / dim) / np.sqrt(dim)
    mat.setflags(write=False)
    return mat


def honest_state(graph, coloring: Sequence[int]) -> ProofState:
    """The intended proof: uniform over vertices, each tagged with its color."""
    from .graphs import check_coloring

    col = check_coloring(graph, coloring)
    table = np.zeros((graph.n, graph.K), dtype=np.complex128)
    table[np.arange(graph.n), col] = 1.0 / np.sqrt(graph.n)
    return ProofState(graph.n, graph.K, table.reshape(-1))


def _transform(table: np.ndarray, dim: int, axis: int, method: str) -> np.ndarray:
    if method == "direct":
        if axis == 0:
            return dft_matrix(dim) @ table
        return table @ dft_matrix(dim)  # DFT matrices are symmetric
    if method == "fft":
        # ifft carries the +i kernel with a 1/dim factor; rescale to unitary.
        return np.fft.ifft(table, axis=axis) * np.sqrt(dim)
    raise ValueError(f"unknown transform method {method!r}")


def fourier_color(state: ProofState, method: str = "direct") -> ProofState:
    """Apply the size-K DFT to the color register of every vertex."""
    out = _transform(state.table, state.K, 1, method)
    return ProofState(state.n, state.K, out.reshape(-1))


def fourier_vertex(state: ProofState, method: str = "direct") -> ProofState:
    """Apply the size-n DFT to the vertex register at every fixed color."""
    out = _transform(state.table, state.n, 0, method)
    return ProofState(state.n, state.K, out.reshape(-1))


def prob_color_zero(state: ProofState) -> float:
    """Probability that the color register reads 0 after ``fourier_color``.

    The input is the raw (pre-transform) proof; the transform is applied
    internally and the input is not mutated.
    """
    fc = fourier_color(state)
    return float(np.sum(np.abs(fc.table[:, 0]) ** 2))


def conditional_vertex_state(state: ProofState) -> tuple[np.ndarray, float]:
    """Vertex-register state conditioned on the color reading 0 after
    ``fourier_color``, together with that probability.

    Raises ValueError when the conditioning event has (numerically) zero
    probability.
    """
    fc = fourier_color(state)
    column = fc.table[:, 0]
    p_zero = float(np.sum(np.abs(column) ** 2))
    if p_zero < _NULL_EVENT:
        raise ValueError("cannot condition on a zero-probability color outcome")
    return column / np.sqrt(p_zero), p_zero


def vertex_marginals(state: ProofState) -> np.ndarray:
    """Born probabilities of each vertex on the raw state (colors summed)."""
    return np.sum(np.abs(state.table) ** 2, axis=1)


def fidelity(a: ProofState, b: ProofState) -> float:
    """|<a|b>| - global-phase-insensitive state overlap."""
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)))


def _sample(probs: np.ndarray, rng: np.random.Generator) -> int:
    cdf = np.cumsum(probs)
    idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(idx, probs.size - 1)


def measure(state: ProofState, register: str, rng: np.random.Generator) -> MeasurementOutcome:
    """Born-rule measurement of one register (or both, which collapses fully).

    Measuring a single register returns the renormalized posterior on the
    same register layout; measuring both returns no posterior.
    """
    table = state.table
    if register == "color":
        probs = np.sum(np.abs(table) ** 2, axis=0)
        c = _sample(probs, rng)
        post = np.zeros_like(table)
        post[:, c] = table[:, c] / np.sqrt(probs[c])
        return MeasurementOutcome("color", c, ProofState(state.n, state.K, post.reshape(-1)))
    if register == "vertex":
        probs = vertex_marginals(state)
        v = _sample(probs, rng)
        post = np.zeros_like(table)
        post[v, :] = table[v, :] / np.sqrt(probs[v])
        return MeasurementOutcome("vertex", v, ProofState(state.n, state.K, post.reshape(-1)))
    if register == "both":
        probs = np.abs(state.amplitudes) ** 2
        flat = _sample(probs, rng)
        return MeasurementOutcome("both", (flat // state.K, flat % state.K), None)
    raise ValueError(f"unknown register {register!r}")


def state_records(state: ProofState, tol: float = 0.0) -> list[tuple[int, int, float, float]]:
    """Nonzero amplitudes as (vertex, color, re, im) records, for dumps."""
    out = []
    for flat, amp in enumerate(state.amplitudes):
        if abs(amp) > tol:
            out.append((flat // state.K, flat % state.K, float(amp.real), float(amp.imag)))
    return out
