"""Multi-source morphosyntactic modeling toolkit.

Trains parsers, taggers and lemmatizers over groups of heterogeneous
data sources, conditioning a shared model on learned source embeddings,
with gold, predicted, or absent source information.
"""

__version__ = "0.1.0"
