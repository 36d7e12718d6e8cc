"""Prescribed curvature functions and the scalar flow integrator."""
