# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Attractor bounds across Rayleigh numbers
#
# Rigorous bounds on the enstrophy z, palinstrophy q, temperature-gradient
# norm φ and η for Pr = 1 and L = 2, with every hidden constant set to 1.

# %%
import numpy as np

from rbattractor.bounds import attractor_bounds, eval_f, sample_curves
from rbattractor.params import params_from_ra_pr

for ra in (1e4, 1e5, 1e6, 1e7, 1e8):
    b = attractor_bounds(params_from_ra_pr(ra, 1.0, 2.0))
    print(f"Ra={ra:.0e}  z_max={b.z_max:.3e}  theta={b.theta_used:.3e}  "
          f"q2={b.q2_exact:.3e}  eta1={b.eta1_exact:.3e}")

# %% [markdown]
# ## The palinstrophy curve
#
# For z in [z1, z0] the curve follows f1. It switches to f2 down to z2 and
# to f3 near the origin. The largest value is q2, reached at z2.

# %%
b = attractor_bounds(params_from_ra_pr(1e6, 1.0, 2.0))
cf = b.curve_f
z = np.linspace(0.0, cf.z0, 100001)
f = eval_f(cf, z)
print("argmax z / z2 =", z[np.argmax(f)] / cf.z2)
print("max f / q2    =", f.max() / cf.q2)
print("z2 / z1       =", cf.z2 / cf.z1)

# %% [markdown]
# Everywhere on (0, z0] the curve stays above the edge of the region where
# enstrophy is dissipated.

# %%
zs, fs, phis, gs = sample_curves(cf, b.curve_g, n_samples=12, decades=6)
for zi, fi in zip(zs, fs):
    print(f"z={zi:.3e}  f={fi:.3e}  margin={fi / cf.region_boundary(zi):.3e}")

# %% [markdown]
# ## The η curve
#
# g climbs along g2 to its peak η1 = γφ1 at φ1, then falls along the line g1
# to η0 at the largest admissible φ.

# %%
for phi, g in zip(phis, gs):
    print(f"phi={phi:.3e}  g={g:.3e}")
