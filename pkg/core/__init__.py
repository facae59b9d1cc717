"""Core package for the multi-view zero-shot classifier."""
