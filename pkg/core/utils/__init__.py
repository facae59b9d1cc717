"""Utility modules shared by every component."""
