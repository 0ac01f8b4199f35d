"""Run the built-in cheating strategies against one instance.

Each adversary attacks a different part of the verifier and is caught by a
different reject reason:

* ``phase_adversary`` loads a nonzero color frequency, so the zero-color
  probability vanishes and step 1 rejects on the count alone.
* ``skewed`` supports only half the vertices; the surviving zero-color
  states fail the vertex Fourier check.
* ``inconsistent`` alternates two colorings across provers; the consistency
  test catches the disagreement on measured pairs.
* ``classical_basis`` sends one basis state |v, c(v)> per prover.  Proper
  answers sail through consistency, but a point mass is as far from the
  uniform superposition as possible, so step 1 rejects almost surely.
"""

import bellqma as bq

graph, planted = bq.planted_satisfiable(100, 3, 4, seed=5)
params = bq.ProtocolParams(16, 100, 3)
trials = 4000
other = [(c + 1) % 3 for c in planted]
basis_pairs = [(i % graph.n, planted[i % graph.n])
               for i in range(params.num_provers)]

zoo = {
    "honest": bq.honest(planted),
    "phase_adversary": bq.phase_adversary(frequency=1),
    "skewed_half": bq.skewed(subset=range(50), coloring=planted),
    "inconsistent": bq.inconsistent(colorings=[planted, other]),
    "classical_basis": bq.classical_basis(assignments=basis_pairs),
}

print(f"{params.num_provers} provers on n={graph.n}, K={graph.K}; "
      f"{trials} trials each\n")
header = f"{'strategy':16s} {'accept':>7s}  dominant reject reason"
print(header)
print("-" * len(header))
for name, strategy in zoo.items():
    estimate, counts = bq.estimate_acceptance(strategy, graph, params,
                                              trials, seed=11)
    rejects = {k: v for k, v in counts.reasons.items() if k != "none"}
    top = max(rejects, key=rejects.get)
    share = rejects[top] / trials
    print(f"{name:16s} {estimate.value:7.3f}  {top} ({share:.0%} of trials)")

# The phase adversary is the starkest: every uniformity trial dies at the
# count threshold, and only the coin's consistency half survives.  The
# skewed strategy shows the two-stage design working as intended -- its
# zero-color counts look honest, so rejection comes from the Fourier stage.
