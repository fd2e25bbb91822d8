"""Band functions of a few fiber operators, from flat Landau levels to a
magnetic step and a field that changes sign.

Run from anywhere; figures go to ``demos/figures``.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from iwatsuka import Constant, EigenvalueCollisionError, Step, TanhStep, diagnose, sweep, tail_bounds

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "figures")
os.makedirs(OUT, exist_ok=True)
ZERO = Constant(0.0)

# %% Constant field: every band is flat at 2n - 1
xi = np.linspace(-10, 10, 41)
landau = sweep(Constant(1.0), ZERO, xi, 3)
print("landau spread per band:", np.ptp(landau.bands, axis=1))

# %% A step from B = 1 to B = 2 at the origin.
# For very negative xi the well sits deep in the B = 2 region, so the bands
# approach 2(2n - 1); for large positive xi they approach 2n - 1.
xi = np.linspace(-40, 40, 161)
step = sweep(Step(1.0, 2.0, 0.0), ZERO, xi, 3)
d = diagnose(step)
for e in d.tail_report:
    print(f"band {e.band} at xi={e.xi:+.0f}: {e.value:.5f} vs [{e.interval[0]:g}, {e.interval[1]:g}]")
print("min gap", d.min_gap)

# %% Smooth version of the same step, for comparison
tanh = sweep(TanhStep(1.0, 2.0, 0.0, 1.0), ZERO, xi, 3)

fig, ax = plt.subplots(figsize=(7, 4))
for n in range(3):
    ax.plot(xi, step.bands[n], color=f"C{n}", label=f"step, n={n + 1}")
    ax.plot(xi, tanh.bands[n], color=f"C{n}", ls=":", label=f"tanh, n={n + 1}")
t = tail_bounds(Step(1.0, 2.0, 0.0), ZERO)
for n in range(1, 4):
    ax.axhline(t.b_under_plus * (2 * n - 1), color="gray", lw=0.5, ls="--")
    ax.axhline(t.b_under_minus * (2 * n - 1), color="gray", lw=0.5, ls="--")
ax.set_xlabel(r"$\xi$")
ax.set_ylabel(r"$\lambda_n(\xi)$")
ax.legend(fontsize=7, ncol=2)
fig.tight_layout()
fig.savefig(os.path.join(OUT, "step_bands.png"), dpi=120)

# %% A field that flips sign.  A_y grows like |x| on both sides, so the
# effective potential is a symmetric double well for xi < 0 and a single
# steep well for xi > 0, where the bands grow without bound.
# Deep in the double-well regime the two lowest levels are degenerate to
# round-off, and the sweep refuses to order them.
try:
    sweep(TanhStep(-1.0, 1.0, 0.0, 1.0), ZERO, [-6.0], 2)
except EigenvalueCollisionError as exc:
    print("expected:", exc)

flip = sweep(TanhStep(-1.0, 1.0, 0.0, 1.0), ZERO, np.linspace(-2, 20, 89), 2)
print("lambda_1 at xi = -2, 0, 20:", flip.band(1)[[0, 8, -1]])

fig, ax = plt.subplots(figsize=(6, 4))
for n in range(2):
    ax.plot(flip.xi_grid, flip.bands[n], label=f"n={n + 1}")
ax.set_xlabel(r"$\xi$")
ax.set_ylabel(r"$\lambda_n(\xi)$")
ax.set_yscale("log")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(OUT, "sign_change_bands.png"), dpi=120)
