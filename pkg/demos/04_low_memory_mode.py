# %% [markdown]
# # Stored versus matrix-free iterations
#
# The coupling matrix C is about five times larger than the block diagonal
# D.  In matrix-free mode each product with C regenerates the face blocks,
# uses them once and drops them.  The iterates are the same up to rounding;
# only time and memory differ.

# %%
import time

import numpy as np

from uwvf.scenarios import Scenario, run

small = Scenario.from_dict({
    "name": "small_pec",
    "length_unit": "wavelength",
    "mesh": {"kind": "sphere", "radii": [0.25, 0.5, 0.75], "refinement": 0, "curved": True},
    "outputs": {"rcs": {"angles": [0, 180, 10], "surface_radius": 0.5}},
    "reference": {"kind": "mie", "radius": 0.25, "pec": True},
})

# %%
out = {}
for mode in ("stored", "matrix_free"):
    t = time.perf_counter()
    out[mode] = run(small, mode=mode)
    print(f"{mode:12s} {time.perf_counter() - t:6.2f} s, {out[mode].report['iterations']} iterations")

a, b = out["stored"].chi, out["matrix_free"].chi
print("relative difference of the unknowns:", np.linalg.norm(a - b) / np.linalg.norm(a))
