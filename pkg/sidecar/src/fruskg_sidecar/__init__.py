"""HTTP sidecar serving embeddings and named-entity annotations."""

__version__ = "0.1.0"
