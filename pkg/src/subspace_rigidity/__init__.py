"""Generic rigidity of pinned subspace-incidence systems and fitted dictionary learning."""

__version__ = "0.1.0"
