"""Electrolyte formulation property prediction from composition-weighted
molecular embeddings."""

__version__ = "0.1.0"
