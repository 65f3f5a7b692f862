"""Board games as text: corpora, a WordPiece tokenizer, a small masked LM, and arenas."""

__version__ = "0.1.0"
