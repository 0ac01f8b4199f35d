"""Audit the closed-form tail bounds against exact binomial tails.

Step 1 of the protocol leans on two Chernoff-style estimates for the
zero-color count:

* completeness: honest provers read color 0 with probability 1/K each, and
  P[Bin(N, 1/K) < ceil(99 mu / 100)] <= exp(-mu / 20000);
* soundness: with few strong provers, at most a Bin(N, 1/(4K)) count of
  weak provers can land in Z, and the claim is
  P[count >= 49 mu / 100] <= exp(-(24^2 / (25^2 * 2)) * mu / 4).

Both are checked here with exact rational tail sums over a 27-point grid.
The completeness form holds everywhere.  The soundness form recycles the
lower-tail exponent delta^2/2 for an upper tail, where only the weaker
delta^2/(2+delta) family is valid in general -- and the grid finds the
counterexample: at n=400, K=3, C=32 the exact tail exceeds the bound.
"""

import itertools
import math
from fractions import Fraction

import bellqma as bq

grid_n, grid_k, grid_c = (25, 100, 400), (2, 3, 4), (8, 16, 32)

print(f"{'point':>16s} {'completeness':>14s} {'soundness':>11s}  tail/bound")
violations = []
for n, K, C in itertools.product(grid_n, grid_k, grid_c):
    params = bq.ProtocolParams(C, n, K)
    mu = params.mu_exact

    lower = bq.chernoff_audit(params.num_provers, Fraction(1, K),
                              params.z_threshold, "completeness", mu=mu)
    threshold = math.ceil(Fraction(49, 100) * mu)
    upper = bq.chernoff_audit(params.num_provers, Fraction(1, 4 * K),
                              threshold, "soundness", mu=mu)
    ratio = float(upper.exact_tail) / upper.bound
    flag = "  <-- bound violated" if not upper.ok else ""
    print(f"n={n:3d},K={K},C={C:2d} {str(lower.ok):>14s} {str(upper.ok):>11s}"
          f"  {ratio:10.3e}{flag}")
    if not upper.ok:
        violations.append((n, K, C, upper))

print()
for n, K, C, res in violations:
    print(f"at n={n}, K={K}, C={C}: exact tail {float(res.exact_tail):.6e} "
          f"> stated bound {res.bound:.6e}")
    # The fix is standard: for an upper tail at relative deviation
    # delta = 24/25, Bernstein gives exponent delta^2/(2 + 2*delta/3).
    delta = 24 / 25
    bernstein = math.exp(-(delta ** 2 / (2 + 2 * delta / 3)) * float(res.mu) / 4)
    print(f"  Bernstein form exp(-delta^2/(2+2delta/3) * mu/4) = "
          f"{bernstein:.6e} would hold here")
