# %% [markdown]
# # Salisbury screen
#
# A resistive sheet a quarter wavelength in front of a conducting plane
# absorbs a normally incident wave completely when its normalised
# conductance is one.  The box below is one wavelength long; PEC walls at
# y = const and PMC walls at z = const make it a one-dimensional waveguide.

# %%
import numpy as np

from uwvf.oracle import SalisburySpec, salisbury_solution
from uwvf.scenarios import preset, run

# %%
for name in ("salisbury_eta1", "salisbury_eta0.5"):
    res = run(preset(name))
    m = res.report["metrics"]
    print(f"{name}: {res.report['N_DoF']} unknowns, {res.report['iterations']} iterations")
    print(f"  |R| fitted left of the sheet: {m['reflection']:.2e}")
    print(f"  R fitted {complex(*m['reflection_fit']):.5f}  exact {complex(*m['reflection_exact']):.5f}")
    print(f"  max field error along the line: {m['field_max_rel']:.2e}")

# %% [markdown]
# ## The field along the line
#
# The last run holds the sampled field.  Left of the sheet it is a standing
# wave with reflection -1/3; between the sheet and the conductor it decays to
# zero at the wall.

# %%
x = res.field.positions[:, 0]
sc = res.scenario
exact = salisbury_solution(SalisburySpec(0.25 * sc.wavelength, 0.5, sc.kappa)).E_y(x)
for i in range(0, len(x), 20):
    print(f"x = {x[i] / sc.wavelength:+.3f} lambda   |E_y| = {abs(res.field.E[i, 1]):.4f}   exact {abs(exact[i]):.4f}")
