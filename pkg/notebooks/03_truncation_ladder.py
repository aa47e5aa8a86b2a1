# %% [markdown]
# # Solving with a truncated potential
#
# Replace `V` by `min(j, V)`, solve, and let `j` grow.  For a Dirac mass at
# the origin of the unit ball in R^3 the outcome depends on the exponent:
# a mild singularity leaves a limit, a strong one squeezes the solution to
# zero.

# %%
import numpy as np

from potcap import PotentialSpec
from potcap.experiments import dichotomy_experiment
from potcap.solver import MeasureData, RadialMesh, radial_solve

mesh = RadialMesh(3, 1.0, 1024)
ladder = [10 * 2**k for k in range(11)]

# %% [markdown]
# Sanity check first: with no potential the radial solver returns the
# Green function `(1/r - 1) / (4 pi)`.

# %%
u = radial_solve(3, np.zeros(mesh.cells), 1.0, mesh).u
green = (1 / mesh.centers - 1) / (4 * np.pi)
band = (mesh.centers > 0.2) & (mesh.centers < 0.8)
print("max relative error on [0.2, 0.8]:", np.abs(u[band] / green[band] - 1).max())

# %%
for m in (1, 3):
    rep = dichotomy_experiment(PotentialSpec.point_power(np.zeros(3), m), MeasureData.dirac(np.zeros(3)), mesh, ladder)
    print(f"\nm={m}: verdict {rep.verdict}, a-priori ratio spread {rep.ratio_spread:.3f}")
    print("   j        ||u_j||_1   int V_j u_j   gap")
    for j, l1, ms, _, gap, _, _ in rep.rows():
        print(f"{j:8.0f}  {l1:.4e}  {ms:.4e}  {gap:.3e}")
