"""veritas: LLM-assisted evaluation of news-publisher reliability criteria."""

__version__ = "0.1.0"
