# %% [markdown]
# # Plane-wave bases on a single element
#
# Each element carries 2p plane waves `A exp(i k d . x)`.  The number of
# directions p grows with the electrical size of the element, and the
# Z-weighted boundary Gram matrix D must stay well conditioned.

# %%
import numpy as np

from uwvf.assembly import element_D, element_outgoing_gram
from uwvf.basis import direction_count, hammersley_directions, make_basis, polarization_pair, reference_condition
from uwvf.mesh import Boundary, Material, build_topology

# %% [markdown]
# ## How many directions?
#
# The count is a quadratic in `kappa_abs * h_av`, with coefficients that
# depend on the element kind and on the admissible condition number.

# %%
for kh in (0.5, 1.0, 2.0, 4.0):
    row = [direction_count(kind, kh, 1.0, 1e7) for kind in ("tetra", "wedge", "hexa")]
    print(f"kappa*h = {kh:4.1f}: tetra {row[0]:3d}  wedge {row[1]:3d}  hexa {row[2]:3d}")

# %% [markdown]
# ## Directions and polarizations
#
# Directions come from a Hammersley set on the sphere, so a smaller set is a
# prefix of a larger one.  Each direction gets two orthonormal polarizations.

# %%
d = hammersley_directions(16)
a1, a2 = np.array([polarization_pair(v) for v in d]).transpose(1, 0, 2)
print("max |d . A1| =", np.abs(np.einsum("ij,ij->i", d, a1)).max())
print("max |A1 . A2| =", np.abs(np.einsum("ij,ij->i", a1, a2)).max())
cos = d @ d.T
np.fill_diagonal(cos, -1)
print("smallest angle between directions: %.1f deg" % np.degrees(np.arccos(cos.max())))

# %% [markdown]
# ## Incoming and outgoing traces
#
# For a lossless element the incoming and outgoing impedance traces have the
# same Z-weighted norm, so their Gram matrices coincide.  With losses the
# outgoing Gram matrix is smaller.

# %%
verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1.0]])
for mat in (Material(2.0), Material(1.5 + 0.5j)):
    mesh = build_topology([("tetra", [0, 1, 2, 3], 0)], verts, lambda c, o, n: Boundary(0.0), [mat])
    b = make_basis(mesh.elements[0], mat, 3.0, 8)
    D = element_D(mesh, b)
    G = element_outgoing_gram(mesh, b)
    print(f"eps_r = {mat.eps_r}: ||D - G|| / ||D|| = {np.linalg.norm(D - G) / np.linalg.norm(D):.2e}, "
          f"min eig(D - G) = {np.linalg.eigvalsh(D - G).min():.2e}")

# %% [markdown]
# ## Conditioning against p
#
# Adding directions makes the family more nearly dependent.  The reference
# condition number shows where the 1e7 bound is reached.

# %%
for p in (8, 16, 24, 32):
    print(f"p = {p:2d}: cond(D) = {reference_condition('tetra', 2.0, p):.2e}")
