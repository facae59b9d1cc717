"""Command-line interface (1.8.0)."""
