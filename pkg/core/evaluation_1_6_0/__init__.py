"""ZSL/GZSL metrics and calibrated stacking (1.6.0)."""
