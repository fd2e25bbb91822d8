"""A thin curved layer in a homogeneous field.

The curve's tangent direction controls the effective field B0 x'(s), and its
curvature adds the attractive potential -kappa^2/4.  A 60 degree bend gives
two different field strengths on the two leads; a sharper smooth bend also
pulls the lowest band below both tail levels near the bend."""

import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from iwatsuka import circular_bend, effective_profile, layer_ac_check, layer_bands, smooth_bend

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "figures")
os.makedirs(OUT, exist_ok=True)
deg = math.pi / 180

bend = circular_bend(2.0, 0.0, 60 * deg)
e = effective_profile(bend, 1.0)
r = layer_ac_check(e)
print("verdict:", r.decision.verdict, r.decision.matched_condition, "clause", r.clause)

xi = np.linspace(-40, 40, 81)
sw = layer_bands(e, xi, 2)
print("lambda_1 at the ends:", sw.band(1)[[0, -1]])

# %% sharper turn with a narrow curvature peak
sharp = effective_profile(smooth_bend(0.0, 60 * deg, 0.2), 1.0)
sw2 = layer_bands(sharp, xi, 2)
print("smallest lambda_1 for the sharp bend:", sw2.band(1).min())

fig, axes = plt.subplots(1, 3, figsize=(12, 3.5))
axes[0].plot(bend.x, bend.z, label="circular")
c2 = smooth_bend(0.0, 60 * deg, 0.2)
axes[0].plot(c2.x, c2.z, ls="--", label="smooth, w=0.2")
axes[0].set_aspect("equal")
axes[0].set_xlim(-10, 10)
axes[0].set_ylim(-3, 12)
axes[0].legend(fontsize=8)
s = np.asarray(e.b_eff.x)
axes[1].plot(s, e.b_eff.y, label=r"$B_0\dot x$")
axes[1].plot(s, e.w_eff.y, label=r"$-\kappa^2/4$")
axes[1].set_xlim(-8, 12)
axes[1].set_xlabel("s")
axes[1].legend(fontsize=8)
axes[2].plot(xi, sw.band(1), label="circular")
axes[2].plot(xi, sw2.band(1), ls="--", label="smooth, w=0.2")
axes[2].axhline(0.5, color="gray", lw=0.5)
axes[2].axhline(1.0, color="gray", lw=0.5)
axes[2].set_xlabel(r"$\xi$")
axes[2].set_ylabel(r"$\lambda_1$")
axes[2].legend(fontsize=8)
fig.tight_layout()
fig.savefig(os.path.join(OUT, "curved_layer.png"), dpi=120)
