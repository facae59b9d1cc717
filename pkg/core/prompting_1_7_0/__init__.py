"""k-shot view generation with a language model (1.7.0)."""
