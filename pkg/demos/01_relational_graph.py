"""Space as a graph of relations, with particles attached to it.

A 2D lattice provides the spatial points.  Two identical particles are
attached through amplitude rows and entangled with each other.  The
canonical form then shows that swapping the particles' labels changes
nothing physical.
"""
import numpy as np

from relsim import (
    add_entanglement_edge,
    attach_particle,
    build_lattice,
    canonical_form,
)

space = build_lattice([4, 4], periodic=True)
print(f"{space.n_spatial} spatial points, {len(space.edges())} relations")
print("degrees:", sorted(set(space.degrees.tolist())))

ga = attach_particle(space, {0: 1.0, 1: 1.0j})
ga = attach_particle(ga, {5: 1.0, 6: -1.0})
ga = add_entanglement_edge(ga, 0, 1, 0.8)

full = ga.assemble()
print("generalized adjacency:", full.shape, "Hermitian:", np.allclose(full, full.conj().T))

swapped = ga.permute_objects([1, 0])
print("labels swapped, same canonical form:", canonical_form(swapped) == canonical_form(ga))

nudged = attach_particle(attach_particle(space, {0: 1.0, 1: 1.0j + 1e-3}), {5: 1.0, 6: -1.0})
nudged = add_entanglement_edge(nudged, 0, 1, 0.8)
print("amplitude nudged by 1e-3, same canonical form:", canonical_form(nudged) == canonical_form(ga))
