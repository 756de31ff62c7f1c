"""Critical probabilities, transition types and the phase diagram of a mixed law.

The law puts mass 3/5 on two children and 2/5 on five. Its ``g`` is largest at
x = 0, so the first transition is continuous at q_c = 5/6, but ``g`` also has an
interior local maximum, which produces a second, discontinuous jump.

Run with ``python demos/critical_probabilities.py``.
"""

from fractions import Fraction

from gwboot import OffspringDistribution, classify, critical_q, delta, phase_diagram
from gwboot.cli import emit_plot_data

mixed = OffspringDistribution(2, {2: Fraction(3, 5), 5: Fraction(2, 5)})

for name, xi in [("delta_2", delta(2)), ("mixed", mixed)]:
    q_c, argmax = critical_q(xi)
    cls = classify(xi)
    print(f"{name:8s} q_c = {q_c}  argmax = {[str(a.x) for a in argmax]}  {cls.case}")

pd = phase_diagram(mixed)
for tr in pd.transitions:
    print(f"  {tr.kind:14s} at q = {float(tr.q):.6f}, x* = {float(tr.x_star):.6f}, jump {float(tr.jump):.4f}")

# data for a plot of g with the reference lines 1/q
csv = emit_plot_data(mixed, "g_of_x", points=11, qs=[Fraction(4, 5), Fraction(5, 6), Fraction(19, 20)])
print(csv)
