"""FRUS corpus to knowledge graph: parsing, entity unification, Wikidata
linking, graph assembly, and analytics."""

__version__ = "0.1.0"
