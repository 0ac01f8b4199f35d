"""The two-test verification protocol.

Each trial flips a fair coin and runs exactly one of:

* Uniformity Test - Fourier-transform every proof's color register and
  measure it; let Z be the provers reading 0.  Reject (``low_zero_count``)
  when |Z| falls below the threshold; otherwise Fourier-transform the
  vertex register of each member of Z and reject
  (``vertex_fourier_nonzero``) unless every outcome is 0.
* Consistency Test - measure every proof in the computational basis and
  reject on the first pair (lexicographic order) that violates a stored
  edge relation in either orientation (``edge_violation``) or lands on
  the same vertex with different colors (``vertex_color_mismatch``).

Sampling is exact inverse-CDF over Born probabilities; the Monte Carlo
estimator and the closed-form/oracle acceptance computations consume the
same probability tables, so they agree up to sampling error only.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Sequence

import numpy as np

from .graphs import ConstraintGraph, violation_tables
from .rng import TrialStream, trial_uniforms
from .states import ProofState, dft_matrix, fourier_color

REJECT_REASONS = (
    "none",
    "low_zero_count",
    "vertex_fourier_nonzero",
    "edge_violation",
    "vertex_color_mismatch",
)

_CHUNK = 2048
_NULL_EVENT = 1e-18

__all__ = [
    "AcceptanceEstimate",
    "ProtocolParams",
    "REJECT_REASONS",
    "TrialCounts",
    "TrialResult",
    "brute_force_consistency_acceptance",
    "brute_force_consistency_breakdown",
    "consistency_test",
    "estimate_acceptance",
    "exact_uniformity_acceptance",
    "run_trial",
    "uniformity_test",
]


def _ceil_fraction(x: Fraction) -> int:
    # C arrives as a float, so e.g. C = 5/3 lands a hair above the real
    # value; snap near-integers down before the (otherwise exact) ceiling.
    nearest = round(x)
    if abs(x - nearest) < Fraction(1, 10 ** 9):
        return int(nearest)
    return -((-x.numerator) // x.denominator)


def _ceil_real(x: float) -> int:
    # Snap values a hair above an integer back down before taking the
    # ceiling, so binary roundoff cannot bump a threshold by one.
    nearest = round(x)
    if abs(x - nearest) < 1e-9:
        return int(nearest)
    return math.ceil(x)


@dataclass(frozen=True)
class ProtocolParams:
    """Derived protocol sizes for prover-count constant C on an (n, K) instance.

    ``num_provers = ceil(C * sqrt(n))``, ``mu = C * sqrt(n) / K`` (the
    expected zero-color count for honest provers), and the Uniformity
    Test accepts step 1 iff the zero count reaches
    ``z_threshold = ceil(99 * mu / 100)``.  When sqrt(n) is an integer the
    ceilings are evaluated in exact rational arithmetic.
    """

    C: float
    n: int
    K: int
    num_provers: int = 0
    mu: float = 0.0
    z_threshold: int = 0
    mu_exact: Fraction | None = None

    def __post_init__(self):
        if self.n < 1 or self.K < 1 or self.C <= 0:
            raise ValueError("need n >= 1, K >= 1, C > 0")
        root = math.isqrt(self.n)
        if root * root == self.n:
            cn = Fraction(self.C) * root
            mu = cn / self.K
            num = _ceil_fraction(cn)
            thresh = _ceil_fraction(99 * mu / 100)
            object.__setattr__(self, "mu_exact", mu)
            object.__setattr__(self, "mu", float(mu))
        else:
            cn = self.C * math.sqrt(self.n)
            mu = cn / self.K
            num = _ceil_real(cn)
            thresh = _ceil_real(99 * mu / 100)
            object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "num_provers", num)
        object.__setattr__(self, "z_threshold", thresh)
        if self.num_provers < 2:
            raise ValueError(f"protocol needs >= 2 provers, got {self.num_provers}")
        assert self.z_threshold <= self.num_provers


@dataclass(frozen=True)
class TrialResult:
    """Outcome of one trial.

    ``records`` holds the per-prover transcript: for the Uniformity Test
    a ``(color, vertex-or-None)`` pair per prover (vertex present exactly
    when the prover's color read 0); for the Consistency Test a
    ``(vertex, color)`` pair per prover.  ``violating_pair`` is the first
    offending prover pair in lexicographic order, consistency only.
    """

    test: str
    accepted: bool
    reject_reason: str
    records: tuple
    violating_pair: tuple[int, int] | None = None


@dataclass(frozen=True)
class AcceptanceEstimate:
    """An acceptance probability plus how it was obtained.

    ``ci_halfwidth`` is the 95% normal-approximation halfwidth
    ``1.96 * sqrt(v * (1 - v) / trials)`` for Monte Carlo estimates and 0
    for exact/oracle methods.
    """

    value: float
    method: str
    trials: int
    ci_halfwidth: float
    seed: int


@dataclass(frozen=True)
class TrialCounts:
    """Reject-reason histogram over a batch of trials."""

    reasons: dict[str, int]
    uniformity_trials: int
    consistency_trials: int

    @property
    def accepts(self) -> int:
        return self.reasons["none"]


class _Sampler:
    """Per-prover Born CDFs plus the pairwise violation table.

    Built once per strategy; identical state objects share their tables.
    """

    def __init__(self, states: Sequence[ProofState], graph: ConstraintGraph | None,
                 z_threshold: int | None):
        if not states:
            raise ValueError("need at least one proof state")
        n, K = states[0].n, states[0].K
        for s in states:
            if (s.n, s.K) != (n, K):
                raise ValueError("all proof states must share the same registers")
        if graph is not None and (graph.n, graph.K) != (n, K):
            raise ValueError("proof states do not match the instance dimensions")
        self.n, self.K = n, K
        self.num_provers = len(states)
        self.z_threshold = z_threshold

        cache: dict[int, tuple[np.ndarray, np.ndarray | None, np.ndarray]] = {}
        color_rows, cond_rows, joint_rows = [], [], []
        dft_n = dft_matrix(n)
        for s in states:
            key = id(s)
            if key not in cache:
                fc = fourier_color(s).table
                color = np.cumsum(np.sum(np.abs(fc) ** 2, axis=0))
                p_zero = float(np.sum(np.abs(fc[:, 0]) ** 2))
                if p_zero >= _NULL_EVENT:
                    gamma = fc[:, 0] / np.sqrt(p_zero)
                    cond = np.cumsum(np.abs(dft_n @ gamma) ** 2)
                else:
                    cond = None
                joint = np.cumsum(np.abs(s.amplitudes) ** 2)
                cache[key] = (color, cond, joint)
            color, cond, joint = cache[key]
            color_rows.append(color)
            cond_rows.append(cond)
            joint_rows.append(joint)
        self.color_cdf = np.vstack(color_rows)
        self.cond_cdf = cond_rows
        self.joint_cdf = np.vstack(joint_rows)
        self.reason = violation_tables(graph) if graph is not None else None
        self.iu, self.ju = np.triu_indices(self.num_provers, k=1)


def _row_outcomes(cdf_rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF sample one outcome per row (vectorized searchsorted)."""
    idx = (cdf_rows <= u[:, None]).sum(axis=1)
    return np.minimum(idx, cdf_rows.shape[1] - 1)


def _uniformity_outcomes(sampler: _Sampler, uniforms: np.ndarray):
    colors = _row_outcomes(sampler.color_cdf, uniforms[1:, 0])
    zero_set = np.flatnonzero(colors == 0)
    vertices = np.full(sampler.num_provers, -1, dtype=np.int64)
    for i in zero_set:
        cdf = sampler.cond_cdf[i]
        if cdf is None:  # p_zero below 1e-18 yet sampled: not reachable
            raise RuntimeError("sampled a zero-probability color outcome")
        idx = int(np.searchsorted(cdf, uniforms[i + 1, 1], side="right"))
        vertices[i] = min(idx, sampler.n - 1)
    return colors, zero_set, vertices


def _classify_uniformity(zero_set: np.ndarray, vertices: np.ndarray, z_threshold: int) -> int:
    if zero_set.size < z_threshold:
        return 1
    if zero_set.size and np.any(vertices[zero_set] != 0):
        return 2
    return 0


def _consistency_outcomes(sampler: _Sampler, uniforms: np.ndarray) -> np.ndarray:
    return _row_outcomes(sampler.joint_cdf, uniforms[1:, 0])


def _classify_consistency(sampler: _Sampler, outcomes: np.ndarray):
    flags = sampler.reason[outcomes[sampler.iu], outcomes[sampler.ju]]
    hits = np.flatnonzero(flags)
    if hits.size == 0:
        return 0, None
    first = hits[0]  # triu_indices is row-major, i.e. lexicographic (i, j)
    reason = 3 if flags[first] == 1 else 4
    return reason, (int(sampler.iu[first]), int(sampler.ju[first]))


def uniformity_test(states: Sequence[ProofState], params: ProtocolParams,
                    stream: TrialStream) -> TrialResult:
    """Run one Uniformity Test trial.

    The vertex outcome is sampled for every prover whose color read 0,
    whether or not the zero count reached the threshold; the threshold
    gate still decides first.  This keeps each prover's record a pure
    function of its own state and substream.
    """
    sampler = _Sampler(states, None, params.z_threshold)
    uniforms = stream.uniforms(sampler.num_provers)
    colors, zero_set, vertices = _uniformity_outcomes(sampler, uniforms)
    reason = _classify_uniformity(zero_set, vertices, params.z_threshold)
    records = tuple(
        (int(colors[i]), int(vertices[i]) if vertices[i] >= 0 else None)
        for i in range(sampler.num_provers)
    )
    return TrialResult("uniformity", reason == 0, REJECT_REASONS[reason], records)


def consistency_test(states: Sequence[ProofState], graph: ConstraintGraph,
                     stream: TrialStream) -> TrialResult:
    """Run one Consistency Test trial (full computational-basis measurement)."""
    sampler = _Sampler(states, graph, None)
    uniforms = stream.uniforms(sampler.num_provers)
    outcomes = _consistency_outcomes(sampler, uniforms)
    reason, pair = _classify_consistency(sampler, outcomes)
    records = tuple((int(o // sampler.K), int(o % sampler.K)) for o in outcomes)
    return TrialResult("consistency", reason == 0, REJECT_REASONS[reason], records, pair)


def run_trial(states: Sequence[ProofState], graph: ConstraintGraph,
              params: ProtocolParams, stream: TrialStream) -> TrialResult:
    """Flip the fair coin (verifier block, first draw) and run one test."""
    if len(states) != params.num_provers:
        raise ValueError(f"expected {params.num_provers} proof states, got {len(states)}")
    coin = stream.uniforms(len(states))[0, 0]
    if coin < 0.5:
        return uniformity_test(states, params, stream)
    return consistency_test(states, graph, stream)


# ---------------------------------------------------------------------------
# Exact and oracle acceptance


def exact_uniformity_acceptance(states: Sequence[ProofState],
                                params: ProtocolParams) -> AcceptanceEstimate:
    """Exact Uniformity Test acceptance probability by dynamic programming.

    Tracks the count of provers that read color 0 *and* pass the vertex
    check; a prover that enters Z but would fail step 2 contributes to an
    absorbing reject, so summing the in-Z-passing counts at or above the
    threshold gives the acceptance probability exactly.
    """
    if len(states) != params.num_provers:
        raise ValueError(f"expected {params.num_provers} proof states, got {len(states)}")
    cache: dict[int, tuple[float, float]] = {}
    terms = []
    for s in states:
        if id(s) not in cache:
            fc = fourier_color(s).table
            p_zero = float(np.sum(np.abs(fc[:, 0]) ** 2))
            # P[in Z and vertex reads 0] = |sum_v amp(v, 0)|^2 / n
            pass_prob = float(abs(fc[:, 0].sum()) ** 2) / s.n
            cache[id(s)] = (p_zero, pass_prob)
        terms.append(cache[id(s)])
    dist = np.zeros(len(states) + 1)
    dist[0] = 1.0
    for p_zero, pass_prob in terms:
        stay = 1.0 - p_zero
        dist[1:] = dist[1:] * stay + dist[:-1] * pass_prob
        dist[0] *= stay
    value = float(np.sum(dist[params.z_threshold:]))
    return AcceptanceEstimate(value, "exact", 0, 0.0, 0)


def _enumerate_consistency(states: Sequence[ProofState], graph: ConstraintGraph,
                           budget: int):
    sampler = _Sampler(states, graph, None)
    supports = []
    size = 1
    for s in states:
        probs = np.abs(s.amplitudes) ** 2
        nz = np.flatnonzero(probs > 0.0)
        supports.append([(int(o), float(probs[o])) for o in nz])
        size *= nz.size
    if size > budget:
        raise ValueError(f"joint support size {size} exceeds budget {budget}")
    num = len(states)
    pairs = [(i, j) for i in range(num) for j in range(i + 1, num)]
    reason_mass = dict.fromkeys(REJECT_REASONS, 0.0)
    for combo in product(*supports):
        prob = 1.0
        for _, p in combo:
            prob *= p
        outcome = [o for o, _ in combo]
        label = "none"
        for i, j in pairs:
            flag = sampler.reason[outcome[i], outcome[j]]
            if flag:
                label = REJECT_REASONS[3] if flag == 1 else REJECT_REASONS[4]
                break
        reason_mass[label] += prob
    return reason_mass


def brute_force_consistency_acceptance(states: Sequence[ProofState],
                                       graph: ConstraintGraph,
                                       budget: int = 1 << 18) -> AcceptanceEstimate:
    """Exact Consistency Test acceptance by joint-outcome enumeration.

    Only feasible at desk scale: the product of the per-prover support
    sizes must not exceed ``budget``.
    """
    mass = _enumerate_consistency(states, graph, budget)
    return AcceptanceEstimate(mass["none"], "brute_force_oracle", 0, 0.0, 0)


def brute_force_consistency_breakdown(states: Sequence[ProofState],
                                      graph: ConstraintGraph,
                                      budget: int = 1 << 18) -> dict[str, float]:
    """Per-reason probability mass from the same enumeration."""
    return _enumerate_consistency(states, graph, budget)


# ---------------------------------------------------------------------------
# Monte Carlo estimation


def _count_trials(sampler: _Sampler, z_threshold: int, seed: int,
                  start: int, stop: int, only_test: str | None) -> np.ndarray:
    counts = np.zeros(len(REJECT_REASONS) + 2, dtype=np.int64)
    blocks = sampler.num_provers
    for trial in range(start, stop):
        uniforms = trial_uniforms(seed, trial, blocks)
        if only_test is None:
            uniformity = uniforms[0, 0] < 0.5
        else:
            uniformity = only_test == "uniformity"
        if uniformity:
            _, zero_set, vertices = _uniformity_outcomes(sampler, uniforms)
            reason = _classify_uniformity(zero_set, vertices, z_threshold)
            counts[len(REJECT_REASONS)] += 1
        else:
            outcomes = _consistency_outcomes(sampler, uniforms)
            reason, _ = _classify_consistency(sampler, outcomes)
            counts[len(REJECT_REASONS) + 1] += 1
        counts[reason] += 1
    return counts


def _count_chunk(args) -> np.ndarray:
    return _count_trials(*args)


def estimate_acceptance(strategy, graph: ConstraintGraph, params: ProtocolParams,
                        trials: int, seed: int, *, workers: int = 1,
                        only_test: str | None = None
                        ) -> tuple[AcceptanceEstimate, TrialCounts]:
    """Monte Carlo acceptance over ``trials`` coin-flipped protocol trials.

    ``strategy`` is a ProverStrategy or an explicit list of proof states.
    Trial ``t`` draws its randomness from the substream keyed
    ``(seed, t)``, so results are identical for any ``workers`` value and
    any chunking of the trial range.  ``only_test`` pins every trial to
    one test instead of flipping the coin (used by targeted experiments).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if only_test not in (None, "uniformity", "consistency"):
        raise ValueError(f"unknown test {only_test!r}")
    states = strategy if isinstance(strategy, (list, tuple)) else strategy.build(graph, params)
    if len(states) != params.num_provers:
        raise ValueError(f"expected {params.num_provers} proof states, got {len(states)}")
    sampler = _Sampler(states, graph, params.z_threshold)
    spans = [(start, min(start + _CHUNK, trials)) for start in range(0, trials, _CHUNK)]
    if workers > 1 and len(spans) > 1:
        args = [(sampler, params.z_threshold, seed, a, b, only_test) for a, b in spans]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_count_chunk, args))
        counts = np.sum(parts, axis=0)
    else:
        counts = np.zeros(len(REJECT_REASONS) + 2, dtype=np.int64)
        for a, b in spans:
            counts += _count_trials(sampler, params.z_threshold, seed, a, b, only_test)
    reasons = {name: int(counts[i]) for i, name in enumerate(REJECT_REASONS)}
    value = reasons["none"] / trials
    ci = 1.96 * math.sqrt(value * (1.0 - value) / trials)
    estimate = AcceptanceEstimate(value, "monte_carlo", trials, ci, seed)
    tally = TrialCounts(reasons, int(counts[len(REJECT_REASONS)]),
                        int(counts[len(REJECT_REASONS) + 1]))
    return estimate, tally
