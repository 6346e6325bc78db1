"""Persistent homology of unweighted networks via discrete Morse filtrations."""

from .complex import CliqueComplex, build_clique_complex, euler_characteristic, faces
from .graph import DegreeSummary, Graph, degree_summary, load_edge_list, read_edge_list, write_edge_list
from .morse import (
    CriticalReport,
    Filtration,
    MorseAssignment,
    assign_filtration,
    assign_morse,
    critical_simplices,
    dimension_filtration,
    full_weight_filtration,
    optimality_mu,
    verify_morse,
    vertex_function,
)
from .persistence import Barcode, PersistenceDiagram, betti_numbers, compute_persistence, normalize

__version__ = "0.1.0"
