# %% [markdown]
# # Closeness of solutions as eps shrinks
#
# The slow-state error against the reduced system is measured over a halving
# sequence of eps and the log-log slope is fitted.

# %%
from spavg import builtin_example, closeness_sweep, fit_order

sys_, dom, att = builtin_example()
eps = [0.15 * 2.0**-k for k in range(7)]
res = closeness_sweep(sys_, dom, att, [2.0], [0.0, 1.5], 10.0, None, eps)

# %%
for r in res.rows:
    print(f"eps={r.eps:.5f}  sup|x-x_av|={r.sup_x_err:.3e}  late z gap={r.sup_z_gap:.2e}")
fit = fit_order(res)
print(f"slope {fit.slope:.3f}, r2 {fit.r2:.4f}", fit.notes)
