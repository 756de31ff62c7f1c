"""Design a law with a quadratic well at x = 1/10 and watch the plateau grow.

At q slightly below q_c the orbit of the recursion lingers near the well for
roughly eps^(-1/2) steps before dropping to zero.
"""

from fractions import Fraction

from gwboot import design_metastable, measure_metastability

res = design_metastable(2, [1], [Fraction(1, 10)])
print("law:", res.xi)
print("q_c:", res.q_c, " P:", res.P, " certificate ok:", res.certificate.ok)

rep = measure_metastability(res.xi, eps_grid=[1e-3, 1e-4, 1e-5, 1e-6])
fit = rep.plateaus[0]
for eps, length in zip(fit.eps_grid, fit.lengths):
    print(f"eps = {eps:.0e}: plateau length {length}")
print(f"fitted slope {fit.fitted_slope:.3f} (asymptotic value {fit.expected_slope})")
