"""Walk one verification session end to end.

A satisfiable 4-regular instance on 25 vertices is planted, the prescribed
number of provers send the honest superposition over their coloring, and we
run a handful of individual trials to see what the verifier actually records.
The Monte Carlo acceptance is then compared against the exact answer: the
consistency test accepts honest proofs surely, and the uniformity test
acceptance is an explicit binomial tail.
"""

import math
from fractions import Fraction

import bellqma as bq

# --- the instance and the protocol sizing -------------------------------
graph, planted = bq.planted_satisfiable(25, 3, 4, seed=7)
params = bq.ProtocolParams(8, 25, 3)
print(f"instance: n={graph.n} vertices, K={graph.K} colors, "
      f"{len(graph.edges)} edges, id={bq.instance_digest(graph)}")
print(f"protocol: {params.num_provers} provers, zero-color threshold "
      f"{params.z_threshold} (target mean {float(params.mu_exact):.1f})")

# --- a few raw trials ----------------------------------------------------
states = bq.honest(planted).build(graph, params)
for t in range(4):
    result = bq.run_trial(states, graph, params, bq.TrialStream(seed=1, trial=t))
    zeros = sum(1 for r in result.records if r[1] == 0)
    print(f"trial {t}: ran {result.test:11s} -> "
          f"{'accept' if result.accepted else 'reject: ' + result.reject_reason}"
          f"  ({zeros}/{params.num_provers} provers measured color 0)")

# --- Monte Carlo vs. the exact curve -------------------------------------
estimate, counts = bq.estimate_acceptance(bq.honest(planted), graph, params,
                                          trials=20_000, seed=2)
exact_uniformity = bq.exact_uniformity_acceptance(states, params).value
tail = bq.binomial_tail(params.num_provers, Fraction(1, graph.K),
                        params.z_threshold, "upper")
exact_total = 0.5 + 0.5 * exact_uniformity  # consistency never rejects honesty

print(f"\nMonte Carlo acceptance over {estimate.trials} trials: "
      f"{estimate.value:.4f} +- {estimate.ci_halfwidth:.4f}")
print(f"exact acceptance: {exact_total:.4f}")
print(f"  uniformity half is the binomial tail "
      f"P[Bin({params.num_provers}, 1/{graph.K}) >= {params.z_threshold}] "
      f"= {float(tail):.4f}")
print(f"  (dynamic program agrees to {abs(exact_uniformity - float(tail)):.1e})")
print(f"reject reasons seen: "
      f"{ {k: v for k, v in counts.reasons.items() if v and k != 'none'} }")

# Honest proofs still fail the uniformity test roughly half the time at this
# scale: the threshold sits one standard deviation below the mean zero-color
# count, so step 1 alone is a coarse filter.  Completeness comes from the
# fair coin and the bound 1 - exp(-mu/20000) on the *rejection* mass, which
# tightens as C grows.
sigma = math.sqrt(params.num_provers / graph.K * (1 - 1 / graph.K))
print(f"\nzero-count mean {params.num_provers / graph.K:.2f}, "
      f"threshold {params.z_threshold}, sigma {sigma:.2f}")
