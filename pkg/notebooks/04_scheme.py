# %% [markdown]
# # Piecewise approximation scheme
#
# On each interval the slow state is frozen and the fast state follows the
# boundary layer. Measured deviations are compared with the closed-form bounds,
# once on a resolvable grid and once in the fine-grid limit.

# %%
import numpy as np

from spavg import (
    ConstantSet,
    build_time_grid,
    builtin_example,
    construct_xi_y,
    d_bar,
    delta_bar,
    error_signals,
    integrate_full,
    scheme_limit,
    solve_Seps,
)

sys_, dom, att = builtin_example()
c = ConstantSet(L=7.5, P=5.1, L_av=1.2, R=2.5, z_bar=1.5, T=10.0)
eps = 0.15
x, z = integrate_full(sys_, [2.0], [0.0, 1.5], eps, 10.0, dom=dom)

# %%
grid = build_time_grid(eps, 1.0, 10.0)
run = error_signals(x, z, construct_xi_y(sys_, grid, z, [2.0]))
db = delta_bar(eps, 1.0, c)
print(f"S=1: max Delta={run.Delta.max():.3f} (ln bound {db.log():.1f}), "
      f"max D={run.D.max():.3f} (ln bound {d_bar(eps, 1.0, db, c).log():.1f})")
print("refinement change", run.refinement_change)

# %%
S = solve_Seps(c.L, c.T, eps)
lim = scheme_limit(sys_, build_time_grid(eps, S, 10.0), x, z, [2.0], c.L, c.P)
db = delta_bar(eps, S, c)
print(f"S={S:.2e}: ln Delta_upper={lim.Delta_upper.log():.2f} vs ln Delta_bar={db.log():.2f}")
print(f"           ln D_upper={lim.D_upper.log():.2f} vs ln D_bar={d_bar(eps, S, db, c).log():.2f}")
