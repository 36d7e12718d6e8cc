"""Configuration loading and construction of runs."""
