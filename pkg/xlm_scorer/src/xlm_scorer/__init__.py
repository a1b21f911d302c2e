"""xlm_scorer: fine-tune a multilingual encoder and emit bot-probability score files."""

__version__ = "0.1.0"
