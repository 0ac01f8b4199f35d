"""Soundness diagnostics and quantitative audits.

This module reproduces the quantities driving the soundness argument:
per-prover zero-color probabilities and the strong-prover set, light
(low-mass) vertices, the Fourier distance of conditioned vertex states
from uniform, a Bernoulli coupling that counts provers usable as uniform
samplers, a birthday-collision estimator for pairs of measured proofs,
and exact binomial-tail audits of the closed-form concentration bounds.
Bounds are computed in exact rational arithmetic wherever possible; all
confidence intervals are 95% normal approximations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .graphs import ConstraintGraph, check_coloring, violation_tables
from .protocol import ProtocolParams, _ceil_fraction
from .rng import uniforms
from .states import ProofState, conditional_vertex_state, dft_matrix, vertex_marginals

CASE_LABELS = ("few_strong_provers", "large_light_set", "main_case")
_TOL = 1e-10
_NULL_EVENT = 1e-18

__all__ = [
    "CASE_LABELS",
    "ChernoffAuditResult",
    "CollisionEstimate",
    "SecondMomentReport",
    "SoundnessReport",
    "UniformCouplingResult",
    "binomial_tail",
    "chernoff_audit",
    "collision_estimate",
    "coloring_rule",
    "default_epsilon",
    "fourier_distance",
    "second_moment_audit",
    "soundness_report",
    "uniform_coupling_simulation",
    "zero_fourier_amplitude",
]


def default_epsilon(eta: Fraction) -> Fraction:
    """Default slack parameter: eta / 21, strictly inside the eta/20 regime."""
    return Fraction(eta) / 21


def fourier_distance(state: ProofState) -> float:
    """Squared distance of the transformed conditioned vertex state from
    the zero basis vector, ``||F_n |gamma> - e_0||^2``.

    Computed both through the explicit transform and through the unitary
    identity ``||gamma - uniform||^2``; the two must agree to 1e-10.
    """
    gamma, _ = conditional_vertex_state(state)
    n = gamma.size
    transformed = dft_matrix(n) @ gamma
    transformed = transformed.copy()
    transformed[0] -= 1.0
    via_transform = float(np.sum(np.abs(transformed) ** 2))
    via_identity = float(np.sum(np.abs(gamma - 1.0 / np.sqrt(n)) ** 2))
    if abs(via_transform - via_identity) > _TOL:
        raise ArithmeticError(
            f"transform paths disagree: {via_transform!r} vs {via_identity!r}"
        )
    return via_transform


def zero_fourier_amplitude(state: ProofState) -> float:
    """|<0| F_n |gamma>| for the conditioned vertex state gamma."""
    gamma, _ = conditional_vertex_state(state)
    return float(abs(gamma.sum()) / math.sqrt(gamma.size))


@dataclass(frozen=True)
class SoundnessReport:
    """Per-prover soundness quantities and the case split they select.

    ``strong_set`` holds provers whose zero-color probability reaches
    1/(4K); ``light_counts[i]`` counts vertices of prover i with raw
    vertex mass below 1/(8Kn); ``conditional_mass_ok[i]`` checks
    p_zero * |gamma_v|^2 <= marginal_v (+1e-10) everywhere;
    ``fourier_distances`` maps each strong prover to its distance.
    """

    p_zero: tuple[float, ...]
    strong_set: tuple[int, ...]
    light_counts: tuple[int, ...]
    conditional_mass_ok: tuple[bool, ...]
    fourier_distances: dict[int, float]
    case: str
    epsilon: float
    mu: float
    n: int
    K: int


def soundness_report(states: Sequence[ProofState], graph: ConstraintGraph,
                     params: ProtocolParams, epsilon) -> SoundnessReport:
    """Compute the strong set, light vertices and case label for a proof list.

    Case selection: ``few_strong_provers`` iff the strong set has at most
    mu/2 members; otherwise ``large_light_set`` iff some strong prover
    has at least epsilon * n light vertices; otherwise ``main_case``.
    """
    n, K = graph.n, graph.K
    eps = Fraction(epsilon)
    light_cut = 1.0 / (8 * K * n)
    strong_cut = 1.0 / (4 * K)
    p_zeros, lights, mass_ok = [], [], []
    distances: dict[int, float] = {}
    strong: list[int] = []
    for i, state in enumerate(states):
        marginals = vertex_marginals(state)
        lights.append(int(np.sum(marginals < light_cut)))
        try:
            gamma, p_zero = conditional_vertex_state(state)
        except ValueError:
            p_zeros.append(0.0)
            mass_ok.append(True)  # vacuous: conditioning event is null
            continue
        p_zeros.append(p_zero)
        mass_ok.append(bool(np.all(p_zero * np.abs(gamma) ** 2 <= marginals + _TOL)))
        if p_zero >= strong_cut:
            strong.append(i)
            distances[i] = fourier_distance(state)
    if len(strong) <= params.mu / 2:
        case = CASE_LABELS[0]
    elif any(Fraction(lights[i]) >= eps * n for i in strong):
        case = CASE_LABELS[1]
    else:
        case = CASE_LABELS[2]
    return SoundnessReport(
        p_zero=tuple(p_zeros),
        strong_set=tuple(strong),
        light_counts=tuple(lights),
        conditional_mass_ok=tuple(mass_ok),
        fourier_distances=distances,
        case=case,
        epsilon=float(eps),
        mu=params.mu,
        n=n,
        K=K,
    )


@dataclass(frozen=True)
class UniformCouplingResult:
    """Empirical distribution of the count of provers coupled into exact
    uniform samplers (each strong prover with few light vertices joins
    independently with probability (1 - light_count/n) / (8K))."""

    distribution: np.ndarray
    mean: float
    threshold: float
    fraction_meeting: float
    include_probs: tuple[float, ...]
    trials: int
    seed: int


def uniform_coupling_simulation(states: Sequence[ProofState], epsilon, trials: int,
                                seed: int, params: ProtocolParams | None = None
                                ) -> UniformCouplingResult:
    """Simulate the coupled-sampler count and how often it clears
    ``C * sqrt(n) / (32 K^2)`` (prover count stands in for C*sqrt(n) when
    no protocol parameters are supplied)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n, K = states[0].n, states[0].K
    eps = Fraction(epsilon)
    strong_cut = 1.0 / (4 * K)
    probs = []
    for state in states:
        try:
            _, p_zero = conditional_vertex_state(state)
        except ValueError:
            continue
        if p_zero < strong_cut:
            continue
        light = int(np.sum(vertex_marginals(state) < 1.0 / (8 * K * n)))
        if Fraction(light) >= eps * n:
            continue
        probs.append(float(Fraction(n - light, n) / (8 * K)))
    include = np.asarray(probs)
    if params is not None and params.mu_exact is not None:
        threshold_exact = Fraction(params.mu_exact * params.K, 32 * K * K)
        threshold = float(threshold_exact)
        meet_from = _ceil_fraction(threshold_exact)
    else:
        scale = params.mu * params.K if params is not None else float(len(states))
        threshold = scale / (32 * K * K)
        meet_from = math.ceil(threshold - 1e-9)
    dist = np.zeros(include.size + 1, dtype=np.int64)
    meets = 0
    for trial in range(trials):
        draws = uniforms(seed, trial, include.size) if include.size else np.empty(0)
        size = int(np.sum(draws < include))
        dist[size] += 1
        if size >= meet_from:
            meets += 1
    mean = float(np.dot(np.arange(dist.size), dist) / trials)
    return UniformCouplingResult(dist, mean, threshold, meets / trials,
                                 tuple(float(p) for p in include), trials, seed)


# ---------------------------------------------------------------------------
# Collision (birthday) estimation over measured proof pairs


def coloring_rule(graph: ConstraintGraph, coloring: Sequence[int]) -> np.ndarray:
    """Deterministic color rule: vertex v always answers coloring[v]."""
    col = check_coloring(graph, coloring)
    rule = np.zeros((graph.n, graph.K))
    rule[np.arange(graph.n), col] = 1.0
    return rule


@dataclass(frozen=True)
class CollisionEstimate:
    """Monte Carlo estimate of the violating-pair count V among sampled
    (vertex, color) answers; ``mean_lower_bound`` is the exact
    epsilon * C(m, 2) / n guarantee for comparison."""

    num_samples: int
    trials: int
    seed: int
    mean_violations: float
    mean_ci: float
    mean_lower_bound: Fraction
    prob_zero: float
    prob_zero_ci: float
    second_moment: float
    chebyshev_bound: float
    degenerate: bool


def _normalize_sets(s_sets, num_samples: int, n: int, eps: Fraction):
    if isinstance(s_sets, (list, tuple)) and s_sets and np.isscalar(s_sets[0]):
        s_sets = [s_sets]
    sets = [np.asarray(s, dtype=np.int64) for s in s_sets]
    if len(sets) == 1 < num_samples:
        sets = sets * num_samples
    if len(sets) != num_samples:
        raise ValueError(f"{len(sets)} vertex sets for {num_samples} samples")
    for i, s in enumerate(sets):
        if s.size == 0 or s.min() < 0 or s.max() >= n:
            raise ValueError(f"vertex set {i} is empty or out of range")
        if Fraction(int(s.size)) < (1 - eps) * n:
            raise ValueError(f"vertex set {i} has {s.size} < (1 - eps) * n vertices")
    return sets


def _normalize_rules(color_rules, num_samples: int, n: int, K: int):
    rules = color_rules
    if isinstance(rules, np.ndarray) and rules.ndim <= 2 or not isinstance(rules, (list, tuple)):
        rules = [rules]
    elif isinstance(rules, (list, tuple)) and rules and np.isscalar(rules[0]):
        rules = [rules]
    out = []
    for rule in rules:
        arr = np.asarray(rule, dtype=float)
        if arr.ndim == 1:  # a plain coloring
            onehot = np.zeros((n, K))
            onehot[np.arange(n), arr.astype(np.int64)] = 1.0
            arr = onehot
        if arr.shape != (n, K):
            raise ValueError(f"color rule has shape {arr.shape}, expected ({n}, {K})")
        if np.any(arr < 0) or np.any(np.abs(arr.sum(axis=1) - 1.0) > 1e-9):
            raise ValueError("color rule rows must be distributions")
        out.append(arr)
    if len(out) == 1 < num_samples:
        out = out * num_samples
    if len(out) != num_samples:
        raise ValueError(f"{len(out)} color rules for {num_samples} samples")
    return out


def collision_estimate(graph: ConstraintGraph, s_sets, color_rules, num_samples: int,
                       epsilon, trials: int, seed: int) -> CollisionEstimate:
    """Estimate the distribution of V = #{i < j sampled pairs violating an
    edge in either orientation or colliding on a vertex with different
    colors}.

    Every trial draws vertex i uniformly from its set and a color from
    its rule's row, using the per-trial substream keyed ``(seed, trial)``.
    Accumulators are integer-exact, so aggregation order cannot matter.
    """
    if num_samples < 2:
        raise ValueError("need at least two samples per trial")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    eps = Fraction(epsilon)
    sets = _normalize_sets(s_sets, num_samples, graph.n, eps)
    rules = _normalize_rules(color_rules, num_samples, graph.n, graph.K)
    rule_cdf = np.cumsum(np.stack(rules), axis=2)
    violating = violation_tables(graph) > 0
    iu, ju = np.triu_indices(num_samples, k=1)
    same_len = len({s.size for s in sets}) == 1
    stacked = np.stack(sets) if same_len else None
    rows = np.arange(num_samples)

    total_v = 0
    total_v2 = 0
    zeros = 0
    K = graph.K
    for trial in range(trials):
        u = uniforms(seed, trial, 2 * num_samples)
        if stacked is not None:
            picks = (u[:num_samples] * stacked.shape[1]).astype(np.int64)
            verts = stacked[rows, picks]
        else:
            verts = np.array([s[int(u[i] * s.size)] for i, s in enumerate(sets)])
        cdf_rows = rule_cdf[rows, verts]
        colors = np.minimum((cdf_rows <= u[num_samples:, None]).sum(axis=1), K - 1)
        outcome = verts * K + colors
        v_count = int(violating[outcome[iu], outcome[ju]].sum())
        total_v += v_count
        total_v2 += v_count * v_count
        zeros += v_count == 0
    mean = total_v / trials
    second = total_v2 / trials
    variance = max(second - mean * mean, 0.0)
    mean_ci = 1.96 * math.sqrt(variance / trials)
    p_zero = zeros / trials
    p_zero_ci = 1.96 * math.sqrt(p_zero * (1 - p_zero) / trials)
    degenerate = mean == 0.0
    chebyshev = float("inf") if degenerate else variance / (mean * mean)
    bound = eps * Fraction(math.comb(num_samples, 2), graph.n)
    return CollisionEstimate(num_samples, trials, seed, mean, mean_ci, bound,
                             p_zero, p_zero_ci, second, chebyshev, degenerate)


@dataclass(frozen=True)
class SecondMomentReport:
    """Collision estimate plus pass/fail of the bounds it should obey."""

    estimate: CollisionEstimate
    lower_bound_ok: bool
    chebyshev_ok: bool
    degenerate: bool


def second_moment_audit(graph: ConstraintGraph, s_sets, color_rules, num_samples: int,
                        epsilon, trials: int, seed: int) -> SecondMomentReport:
    """Check E[V] >= epsilon * C(m, 2) / n and the Chebyshev consequence
    Pr[V = 0] <= Var/E^2 against the empirical moments (within CI slack).

    A degenerate run (no violations ever observed) passes the Chebyshev
    check vacuously and is flagged.
    """
    est = collision_estimate(graph, s_sets, color_rules, num_samples, epsilon,
                             trials, seed)
    slack = 4.0 / 1.96  # widen the 95% CI to 4 sigma
    lower_ok = est.mean_violations + slack * est.mean_ci >= float(est.mean_lower_bound)
    if est.degenerate:
        cheb_ok = True
    else:
        cheb_ok = est.prob_zero - slack * est.prob_zero_ci <= est.chebyshev_bound
    return SecondMomentReport(est, bool(lower_ok), bool(cheb_ok), est.degenerate)


# ---------------------------------------------------------------------------
# Exact binomial tails vs closed-form concentration bounds


def binomial_tail(count: int, p: Fraction, threshold: int, side: str) -> Fraction:
    """Exact Bin(count, p) tail: ``P[X < threshold]`` (side "lower") or
    ``P[X >= threshold]`` (side "upper")."""
    p = Fraction(p)
    q = 1 - p
    if side == "lower":
        span = range(0, max(min(threshold, count + 1), 0))
    elif side == "upper":
        span = range(max(threshold, 0), count + 1)
    else:
        raise ValueError(f"unknown side {side!r}")
    return sum((math.comb(count, k) * p ** k * q ** (count - k) for k in span),
               Fraction(0))


@dataclass(frozen=True)
class ChernoffAuditResult:
    """Exact tail vs the closed-form bound it is claimed to obey."""

    exact_tail: Fraction
    bound: float
    ok: bool
    side: str
    mu: float
    num_provers: int
    threshold: int


def chernoff_audit(num_provers: int, p, threshold: int, side: str = "completeness",
                   mu=None) -> ChernoffAuditResult:
    """Audit one closed-form concentration bound against the exact tail.

    side "completeness": P[Bin(N, p) < threshold] vs exp(-mu / 2e4) with
    mu defaulting to N*p (the honest zero-count mean).  side "soundness":
    P[Bin(N, p) >= threshold] vs exp(-(24^2 / (25^2 * 2)) * mu / 4) with
    mu defaulting to 4*N*p.  ``ok`` records whether the exact tail stays
    below the bound (compared exactly).
    """
    p = Fraction(p)
    if side == "completeness":
        mu = Fraction(mu) if mu is not None else num_provers * p
        exact = binomial_tail(num_provers, p, threshold, "lower")
        bound = math.exp(-float(mu) / 20000.0)
    elif side == "soundness":
        mu = Fraction(mu) if mu is not None else 4 * num_provers * p
        exact = binomial_tail(num_provers, p, threshold, "upper")
        bound = math.exp(-(24 ** 2 / (25 ** 2 * 2.0)) * float(mu) / 4.0)
    else:
        raise ValueError(f"unknown side {side!r}")
    ok = exact <= Fraction(bound)
    return ChernoffAuditResult(exact, bound, bool(ok), side, float(mu),
                               num_provers, threshold)
