"""Offline regression and characterization tests."""
