"""Numerical construction of graphs with prescribed mean curvature in Lorentzian spacetimes."""
