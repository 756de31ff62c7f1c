"""Passage times through the narrow channel of y -> y - y^4 - eps.

The number of steps needed to cross from y = 0.05 to y = -0.1 grows like
eps^(-3/4); rescaled, it approaches the line integral pi/sqrt(2).
"""

import math

from gwboot.bifurcation import ScalarMapSpec, exit_time, exit_time_limit

for eps in (1e-4, 1e-5, 1e-6):
    rep = exit_time(ScalarMapSpec(exponent=4, eps=eps))
    print(f"eps={eps:.0e}: N={rep.N:7d}  rescaled {rep.rescaled:.4f} in [{rep.lower:.4f}, {rep.upper:.4f}]")

lim = exit_time_limit(ScalarMapSpec(exponent=4), [1e-5, 1e-6, 1e-7])
print("shrinking window:", [round(v, 4) for v in lim.rescaled], "limit", round(math.pi / math.sqrt(2), 4))
