# %% [markdown]
# # Trajectories of the example
#
# Slow state for two values of eps against the reduced solution, and the fast
# norm settling on the unit circle. Writes CSV and SVG files to `figures/`.

# %%
import numpy as np

from spavg import reproduce_figures

data = reproduce_figures(out_dir="figures")
t = data["t"]
for e, x, zn in zip((0.15, 0.015), data["x"], data["znorm"]):
    print(f"eps={e}: sup|x-x_av|={np.abs(x - data['x_av']).max():.3f}, |z(T)|={zn[-1]:.4f}")
