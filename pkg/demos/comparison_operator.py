"""The glued comparison operator: harmonic well on the right, a softer
branch on the left.  As the centre alpha moves away from the join, the low
eigenvalues settle on the oscillator levels 2n - 1."""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from iwatsuka import ComparisonSpec, comparison_potential, convergence_study

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "figures")
os.makedirs(OUT, exist_ok=True)

alphas = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0]
table = convergence_study(1.0, 0.5, 0.0, alphas, 3)
for a, row in zip(alphas, table.errors):
    print(f"alpha={a:5.1f}  errors " + "  ".join(f"{e:.2e}" for e in row))

# The errors stop improving around 1e-5: that is the O(h^2) error of the
# finite-difference oscillator itself, not of the comparison.
fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9, 3.5))
x = np.linspace(-8, 8, 801)
for a in (1.0, 2.0, 4.0):
    ax0.plot(x, comparison_potential(ComparisonSpec(1.0, 0.5, 0.0, a), x), label=rf"$\alpha={a:g}$")
ax0.set_ylim(0, 40)
ax0.set_xlabel("x")
ax0.legend()
for n in range(3):
    ax1.semilogy(alphas, table.errors[:, n], "o-", label=f"n={n + 1}")
ax1.set_xscale("log", base=2)
ax1.set_xlabel(r"$\alpha$")
ax1.set_ylabel("error")
ax1.legend()
fig.tight_layout()
fig.savefig(os.path.join(OUT, "comparison_convergence.png"), dpi=120)
