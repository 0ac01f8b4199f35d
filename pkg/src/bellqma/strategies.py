"""Prover strategies: families of proof-state lists, one state per prover.

A strategy is data (kind + parameters) until ``build`` is called with an
instance and protocol sizes; building is deterministic, so repeated
builds return identical states and estimators may precompute from them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from .graphs import ConstraintGraph, check_coloring
from .protocol import ProtocolParams
from .states import ProofState, honest_state

__all__ = [
    "ProverStrategy",
    "classical_basis",
    "honest",
    "inconsistent",
    "phase_adversary",
    "skewed",
    "strategy_from_spec",
]


@dataclass(frozen=True)
class ProverStrategy:
    kind: str
    params: tuple[tuple[str, Any], ...]

    def __getitem__(self, key: str) -> Any:
        return dict(self.params)[key]

    def build(self, graph: ConstraintGraph, protocol: ProtocolParams) -> list[ProofState]:
        """Materialize one proof state per prover for this instance."""
        if (graph.n, graph.K) != (protocol.n, protocol.K):
            raise ValueError("instance and protocol parameters disagree on (n, K)")
        return _BUILDERS[self.kind](dict(self.params), graph, protocol)


def _strategy(kind: str, **params: Any) -> ProverStrategy:
    return ProverStrategy(kind, tuple(sorted(params.items())))


def honest(coloring: Sequence[int]) -> ProverStrategy:
    """Every prover sends the intended uniform-over-vertices proof."""
    return _strategy("honest", coloring=tuple(int(c) for c in coloring))


def skewed(subset: Sequence[int], coloring: Sequence[int]) -> ProverStrategy:
    """Every prover sends the honest proof restricted to a vertex subset."""
    return _strategy("skewed", subset=tuple(sorted({int(v) for v in subset})),
                     coloring=tuple(int(c) for c in coloring))


def phase_adversary(frequency: int) -> ProverStrategy:
    """Uniform over vertices with a pure color-phase gradient; the color
    register never reads 0 after the Fourier transform."""
    return _strategy("phase_adversary", frequency=int(frequency))


def inconsistent(colorings: Sequence[Sequence[int]],
                 assignment: str | Sequence[int] = "round_robin") -> ProverStrategy:
    """Honest-looking provers answering from different colorings.

    ``assignment`` maps prover index to coloring index: the name
    "round_robin" (prover i uses coloring i mod len) or an explicit list
    whose length must equal the prover count at build time.
    """
    cols = tuple(tuple(int(c) for c in col) for col in colorings)
    if isinstance(assignment, str):
        plan: str | tuple[int, ...] = assignment
    else:
        plan = tuple(int(a) for a in assignment)
    return _strategy("inconsistent", colorings=cols, assignment=plan)


def classical_basis(assignments: Sequence[tuple[int, int]]) -> ProverStrategy:
    """Each prover sends a single computational-basis state |v, c>."""
    return _strategy("classical_basis",
                     assignments=tuple((int(v), int(c)) for v, c in assignments))


def _build_honest(params, graph, protocol):
    state = honest_state(graph, params["coloring"])
    return [state] * protocol.num_provers


def _build_skewed(params, graph, protocol):
    subset = params["subset"]
    col = check_coloring(graph, params["coloring"])
    if not subset:
        raise ValueError("skewed strategy needs a nonempty vertex subset")
    if min(subset) < 0 or max(subset) >= graph.n:
        raise ValueError(f"subset vertices must lie in [0, {graph.n})")
    table = np.zeros((graph.n, graph.K), dtype=np.complex128)
    for v in subset:
        table[v, col[v]] = 1.0 / np.sqrt(len(subset))
    state = ProofState(graph.n, graph.K, table.reshape(-1))
    return [state] * protocol.num_provers


def _build_phase(params, graph, protocol):
    freq = params["frequency"]
    if not 1 <= freq < graph.K:
        raise ValueError(f"frequency must lie in [1, {graph.K}), got {freq}")
    phases = np.exp(2j * np.pi * freq * np.arange(graph.K) / graph.K)
    table = np.tile(phases / np.sqrt(graph.n * graph.K), (graph.n, 1))
    state = ProofState(graph.n, graph.K, table.reshape(-1))
    return [state] * protocol.num_provers


def _build_inconsistent(params, graph, protocol):
    colorings = params["colorings"]
    if not colorings:
        raise ValueError("inconsistent strategy needs at least one coloring")
    plan = params["assignment"]
    if plan == "round_robin":
        indices = [i % len(colorings) for i in range(protocol.num_provers)]
    elif isinstance(plan, str):
        raise ValueError(f"unknown assignment pattern {plan!r}")
    else:
        if len(plan) != protocol.num_provers:
            raise ValueError(
                f"assignment covers {len(plan)} provers, protocol has {protocol.num_provers}"
            )
        indices = list(plan)
    if indices and (min(indices) < 0 or max(indices) >= len(colorings)):
        raise ValueError("assignment index outside the coloring list")
    unique = {idx: honest_state(graph, colorings[idx]) for idx in sorted(set(indices))}
    return [unique[idx] for idx in indices]


def _build_classical(params, graph, protocol):
    assignments = params["assignments"]
    if len(assignments) != protocol.num_provers:
        raise ValueError(
            f"{len(assignments)} basis assignments for {protocol.num_provers} provers"
        )
    out = []
    for v, c in assignments:
        if not (0 <= v < graph.n and 0 <= c < graph.K):
            raise ValueError(f"basis assignment ({v}, {c}) out of range")
        amps = np.zeros(graph.n * graph.K, dtype=np.complex128)
        amps[v * graph.K + c] = 1.0
        out.append(ProofState(graph.n, graph.K, amps))
    return out


_BUILDERS = {
    "honest": _build_honest,
    "skewed": _build_skewed,
    "phase_adversary": _build_phase,
    "inconsistent": _build_inconsistent,
    "classical_basis": _build_classical,
}

_FACTORIES = {
    "honest": honest,
    "skewed": skewed,
    "phase_adversary": phase_adversary,
    "inconsistent": inconsistent,
    "classical_basis": classical_basis,
}


def _resolve_coloring(value, named: Mapping[str, Sequence[int]]):
    if isinstance(value, str):
        if value not in named:
            raise ValueError(
                f"unknown coloring name {value!r}; available: {sorted(named)}"
            )
        return tuple(named[value])
    return tuple(int(c) for c in value)


def strategy_from_spec(spec: Mapping[str, Any],
                       named_colorings: Mapping[str, Sequence[int]] | None = None
                       ) -> ProverStrategy:
    """Build a strategy from its config-file form ``{"kind": ..., <params>}``.

    Coloring-valued parameters may name an entry of ``named_colorings``
    (e.g. "planted", "best") instead of spelling the assignment out.
    """
    named = dict(named_colorings or {})
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind not in _FACTORIES:
        raise ValueError(f"unknown strategy kind {kind!r}; known: {sorted(_FACTORIES)}")
    required = {
        "honest": ("coloring",),
        "skewed": ("subset", "coloring"),
        "phase_adversary": ("frequency",),
        "inconsistent": ("colorings",),
        "classical_basis": ("assignments",),
    }[kind]
    missing = [key for key in required if key not in spec]
    if missing:
        raise ValueError(f"strategy {kind!r} is missing parameters {missing}")
    extras = set(spec) - set(required) - ({"assignment"} if kind == "inconsistent" else set())
    if extras:
        raise ValueError(f"unknown parameters for strategy {kind!r}: {sorted(extras)}")
    if kind == "honest":
        return honest(_resolve_coloring(spec["coloring"], named))
    if kind == "skewed":
        return skewed(tuple(spec["subset"]), _resolve_coloring(spec["coloring"], named))
    if kind == "phase_adversary":
        return phase_adversary(spec["frequency"])
    if kind == "inconsistent":
        cols = [_resolve_coloring(c, named) for c in spec["colorings"]]
        assignment = spec.get("assignment", "round_robin")
        if not isinstance(assignment, str):
            assignment = tuple(int(a) for a in assignment)
        return inconsistent(cols, assignment)
    return classical_basis([tuple(pair) for pair in spec["assignments"]])
