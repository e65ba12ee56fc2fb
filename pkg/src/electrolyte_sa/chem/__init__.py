from .graph import (
    Atom,
    Bond,
    MolGraph,
    canonical_ranks,
    graph_isomorphic,
    is_valence_valid,
    max_valence,
    validate_valence,
)
from .smiles import parse_smiles, write_smiles

__all__ = [
    "Atom", "Bond", "MolGraph", "canonical_ranks", "graph_isomorphic",
    "is_valence_valid", "max_valence", "parse_smiles", "validate_valence",
    "write_smiles",
]
