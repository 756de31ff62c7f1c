"""Compare simulated trees with the exact recursion.

``estimate_phi`` samples independent trees of depth t; ``prevalence`` samples one
large ball and counts the fraction of infected vertices.
"""

from fractions import Fraction

from gwboot import OffspringDistribution, StopRule, iterate
from gwboot.mcsim import estimate_phi, prevalence_sweep

xi = OffspringDistribution(2, {2: Fraction(1, 2), 3: Fraction(1, 2)})
q = Fraction(9, 10)

for t in range(1, 5):
    exact = iterate(xi, q, StopRule.steps(t), exact=True).values[t]
    est, se = estimate_phi(xi, q, t, 100_000, seed=t)
    print(f"t={t}: exact {float(exact):.5f}  simulated {est:.5f} +- {se:.5f}")

phi2 = float(iterate(xi, q, StopRule.steps(2), exact=True).values[2])
rows = prevalence_sweep(xi, q, R=12, t=2, seeds=range(20))
print(f"1 - phi_2 = {1 - phi2:.5f}")
print("prevalence on 20 balls of radius 12:", ", ".join(f"{r.value:.4f}" for r in rows))
