"""Run pipelines and their on-disk artifacts."""
