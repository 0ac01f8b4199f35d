"""Exact desk-scale simulator of a multi-prover Bell-style verification
protocol for two-variable constraint satisfaction.

The verifier receives one small quantum proof per prover and flips a fair
coin between a uniformity test (Fourier-transform color registers, gate on
the number of zero readings, then Fourier-check their vertex registers) and
a consistency test (measure everything and look for a violated constraint
or a vertex colored two ways).  Everything runs on explicit statevectors
with deterministic, replayable randomness.
"""

from .analysis import (
    ChernoffAuditResult,
    CollisionEstimate,
    SecondMomentReport,
    SoundnessReport,
    UniformCouplingResult,
    binomial_tail,
    chernoff_audit,
    collision_estimate,
    coloring_rule,
    default_epsilon,
    fourier_distance,
    second_moment_audit,
    soundness_report,
    uniform_coupling_simulation,
    zero_fourier_amplitude,
)
from .graphs import (
    ConstraintGraph,
    Diagnostic,
    Edge,
    GapCertificate,
    certify_gap,
    check_coloring,
    clique_neq,
    generate,
    graph_from_dict,
    graph_to_dict,
    instance_digest,
    load_graph,
    odd_cycle_neq,
    planted_satisfiable,
    random_regular,
    satisfied_fraction,
    save_graph,
    validate,
    violation_tables,
)
from .protocol import (
    AcceptanceEstimate,
    ProtocolParams,
    TrialCounts,
    TrialResult,
    brute_force_consistency_acceptance,
    brute_force_consistency_breakdown,
    consistency_test,
    estimate_acceptance,
    exact_uniformity_acceptance,
    run_trial,
    uniformity_test,
)
from .rng import TrialStream, derive_seed, generator, trial_uniforms, uniforms
from .states import (
    MeasurementOutcome,
    ProofState,
    conditional_vertex_state,
    dft_matrix,
    fidelity,
    fourier_color,
    fourier_vertex,
    honest_state,
    measure,
    prob_color_zero,
    state_records,
    vertex_marginals,
)
from .strategies import (
    ProverStrategy,
    classical_basis,
    honest,
    inconsistent,
    phase_adversary,
    skewed,
    strategy_from_spec,
)

__version__ = "0.1.0"
