# %% [markdown]
# # Boundary layer of the example system
#
# With the slow state frozen, the fast dynamics in polar form are
# `r' = 1 - r`, `theta' = -1`, so the distance to the unit circle decays like `e^{-tau}`.
# This script compares the integrator with that closed form.

# %%
import numpy as np

from spavg import builtin_example, example_boundary_closed_form, integrate_boundary_layer

sys_, dom, att = builtin_example()
taus = np.linspace(0.0, 10.0, 11)

# %%
for r0 in (0.5, 1.2, 1.5):
    tr = integrate_boundary_layer(sys_, [0.3], [r0, 0.0], 10.0)
    num = tr.at(taus)
    ref = np.array([example_boundary_closed_form([r0, 0.0], t) for t in taus])
    print(f"r0={r0}: max state error {np.abs(num - ref).max():.2e}, steps {len(tr.times) - 1}")

# %% [markdown]
# The distance to the cycle is what the analysis calls the attractor norm.

# %%
tr = integrate_boundary_layer(sys_, [0.3], [1.5, 0.0], 10.0)
for t in (0.0, 1.0, 5.0, 10.0):
    print(t, att.dist(tr.at(t)), 0.5 * np.exp(-t))
