# %% [markdown]
# # Interval length and the error bounds
#
# The interval length `S_eps` grows slowly as `eps -> 0` while `eps^{1/4} S_eps`
# shrinks. The bounds are evaluated in log-domain arithmetic because with realistic
# constants their magnitudes leave double range.

# %%
import math

import numpy as np

from spavg import ConstantSet, bound_report, solve_Seps

for k in range(2, 13, 2):
    e = 10.0**-k
    S = solve_Seps(1.0, 1.0, e)
    print(f"eps=1e-{k:<2d} S={S:.5f} eps^1/4 S={e**0.25 * S:.5f}")

# %%
unit = ConstantSet(L=1.0, P=1.0, L_av=1.0, R=2.5, z_bar=1.5, T=1.0)
for e in 10.0 ** -np.arange(2, 13, 2):
    rep = bound_report(e, unit, lambda s: 3.0 / s)
    print(f"eps={e:.0e}  Delta/sqrt(eps)={rep.ratio('Delta_bar'):.3f}  D/sqrt(eps)={rep.ratio('D_bar'):.3f}")

# %% [markdown]
# Constants of the size measured on the example (L near 7.5) make the interval
# length astronomically small and the bounds astronomically large.

# %%
ex = ConstantSet(L=7.5, P=5.1, L_av=1.2, R=2.5, z_bar=1.5, T=10.0)
rep = bound_report(0.015, ex, lambda s: 3.0 / s)
print(f"S_eps = {rep.S_eps:.3e}")
print(f"ln Delta_bar = {rep.Delta_bar.log():.2f}, ln K = {rep.K_eps.log():.2f}, F defined: {rep.F_eps is not None}")
print(f"ln sqrt(eps) = {math.log(math.sqrt(0.015)):.2f}")
