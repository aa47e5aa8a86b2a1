# %% [markdown]
# # How small is a point?
#
# A point in the unit ball of R^3 has zero volume, but whether it is
# negligible for a Schrödinger operator depends on the potential near it.
# Here we measure it with the weighted cutoff norm and watch the standard
# family of cutoffs either shrink to nothing or blow up.

# %%
import numpy as np

from potcap import CompactSetSpec, Domain, Grid, PotentialSpec
from potcap.capacity import decay_rates, estimate_capacity

grid = Grid(Domain.ball(np.zeros(3), 1.0), 1 / 16)
K = CompactSetSpec.point(np.zeros(3))
schedule = [2**k for k in range(4, 25, 2)]

# %% [markdown]
# With `V = |x|^-3` the gradient and Laplacian of the cutoff are divided by
# a potential that grows faster than they do, so every term decays.

# %%
est = estimate_capacity(K, PotentialSpec.point_power(np.zeros(3), 3), grid, schedule)
for j, nv in est.family_trace:
    print(f"j={j:>9d}  l1={nv.l1:.3e}  grad={nv.grad_term:.3e}  lap={nv.lap_term:.3e}  total={nv.total:.3e}")
print("verdict:", est.verdict)

# %% [markdown]
# The log-log slopes match the scaling argument: the gradient term goes
# like `j^(1 - m/2)` and the Laplacian term like `j^(2 - m)`.

# %%
for m in (2.5, 3.0, 4.0):
    r = decay_rates(K, PotentialSpec.point_power(np.zeros(3), m), grid, [2**k for k in range(3, 11)])
    print(f"m={m}: grad slope {r.grad_slope:+.3f} (expect {1 - m / 2:+.3f}), "
          f"lap slope {r.lap_slope:+.3f} (expect {2 - m:+.3f})")

# %% [markdown]
# A mild potential (`m = 1`) cannot absorb the derivatives, so the totals
# grow along the family and the point keeps positive capacity.

# %%
weak = estimate_capacity(K, PotentialSpec.point_power(np.zeros(3), 1), grid, schedule)
print("m=1 verdict:", weak.verdict, " last totals:", [f"{nv.total:.3g}" for _, nv in weak.family_trace[-3:]])
