"""Few-shot LLM prompting harness for Nepali named-entity recognition."""

__version__ = "0.1.0"
