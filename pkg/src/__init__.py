"""Adaptive data fusion - core package."""
