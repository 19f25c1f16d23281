"""Conditional densities: exact ratio vs the two binned conditionals.

A child variable follows a two-component mixture whose location tracks its
parent.  The exact conditional KDE divides the joint by the parent
marginal; the binned variants do the same over grid weights (sparse sum)
or precomputed density grids (FFT lookup).  The script slices the three
conditionals at two parent values and checks they integrate to one.
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from scipy.integrate import simpson

from binnedbn import BinningRule, CkdeCpd, FkdeCpd, SbkdeCpd

rng = np.random.default_rng(21)
n = 4000
parent = rng.normal(0.0, 1.5, n)
component = rng.random(n) < 0.5
child = np.where(component, parent + rng.normal(0, 0.5, n), rng.normal(4.0, 0.8, n))
matrix = np.column_stack([child, parent])

exact = CkdeCpd.fit("child", ("parent",), matrix)
sparse = SbkdeCpd.fit("child", ("parent",), matrix, grid_size=80, rule=BinningRule.LINEAR)
fourier = FkdeCpd.fit("child", ("parent",), matrix, grid_size=80, rule=BinningRule.LINEAR)

xs = np.linspace(child.min(), child.max(), 600)
fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
for ax, parent_value in zip(axes, (-1.5, 1.0)):
    rows = np.column_stack([xs, np.full_like(xs, parent_value)])
    for label, cpd, style in (
        ("exact", exact, "k-"),
        ("sparse binned", sparse, "--"),
        ("FFT lookup", fourier, ":"),
    ):
        density = np.exp(cpd.conditional_logpdf(rows))
        mass = simpson(density, x=xs)
        print(f"parent={parent_value:+.1f}  {label:<14} mass={mass:.4f}")
        ax.plot(xs, density, style, label=label)
    ax.set_title(f"child | parent = {parent_value:+.1f}")
    ax.set_xlabel("child")
axes[0].set_ylabel("conditional density")
axes[0].legend()

out = pathlib.Path(__file__).with_suffix(".png")
fig.tight_layout()
fig.savefig(out, dpi=120)
print(f"plot saved to {out}")
