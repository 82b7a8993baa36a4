"""Utilities module for bornlab."""
