"""Quantum dynamics on relational graphs.

Spatial points, particles and entanglement share one generalized adjacency
structure.  Particle-space relations evolve with a discrete Schrodinger
iteration on the graph Laplacian.
"""
__version__ = "0.1.0"

from .errors import RelsimError, ValidationError, CapabilityError  # noqa: E402
from .relgraph import (  # noqa: E402
    GeneralizedAdjacency,
    RelationalGraph,
    VertexId,
    Kind,
    add_entanglement_edge,
    attach_particle,
    build_lattice,
    canonical_form,
    from_edge_list,
    graph_from_edges,
    to_edge_list,
)
from .dynamics import (  # noqa: E402
    Scheme,
    Stepper,
    WaveState,
    cayley_step,
    euler_step,
    exact_evolve,
    kernel_matrix,
    kernel_path_sum,
    laplacian,
    path_sum_kernels,
)
from .geometry import resistance_distance, shortcut_impact, shortest_path_distance  # noqa: E402
from .entangle import (  # noqa: E402
    PureState,
    RelationEventLog,
    apply_measurement_interaction,
    collapse,
    locality_check,
    make_epr_with_apparatus,
    pair_relation_measures,
    propagate_relations,
    reduced_density,
)

__all__ = [name for name in dir() if not name.startswith("_")]
