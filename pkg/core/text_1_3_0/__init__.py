"""View tokenisation and word-embedding projection (1.3.0)."""
