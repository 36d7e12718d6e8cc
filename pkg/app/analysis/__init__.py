"""Monitoring, invariant audits and numerical verification of flow runs."""
