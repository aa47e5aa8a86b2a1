# %% [markdown]
# # Where is a potential locally too singular?
#
# The relevant integrability scale for `V` in dimension 3 is the Lorentz
# space `L^{3/2,1}`.  We compute its norm from the decreasing rearrangement
# on graded samples, cutting out ever smaller balls around the singularity.

# %%
import numpy as np

from potcap import Domain, Grid, PotentialSpec
from potcap.rearrange import WeightedSamples, decreasing_rearrangement, lorentz_norm, membership_diagnosis

# %% [markdown]
# A two-valued function first, where everything can be checked by hand.

# %%
u = WeightedSamples([1.0, 3.0], [0.75, 0.25])
r = decreasing_rearrangement(u)
print("breakpoints", r.breakpoints, "cumulative measures", r.cumulative_measures)
print("L^{1,1} norm (the mean):", lorentz_norm(u, 1, 1).value)

# %% [markdown]
# Now `|x|^-m` for a range of exponents.  Below `m = 2` the norm settles as
# the excised ball shrinks; from `m = 2` on each refinement adds a roughly
# constant or growing increment.

# %%
grid = Grid(Domain.ball(np.zeros(3), 1.0), 1 / 16)
for m in (1.0, 1.5, 1.9, 2.0, 2.5, 3.0):
    d = membership_diagnosis(PotentialSpec.point_power(np.zeros(3), m), grid, 1.5, 1)
    vals = ", ".join(f"{v:.4g}" for v in d.values)
    print(f"m={m:3.1f}  {d.classification:9s}  growth exponent {d.growth_exponent:+.3f}  values [{vals}]")
