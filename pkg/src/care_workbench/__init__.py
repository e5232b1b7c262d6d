"""Stage-gated, artifact-driven workbench for engineering tool-using retrieval agents."""

__version__ = "0.1.0"
