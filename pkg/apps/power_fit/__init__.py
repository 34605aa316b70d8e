"""
Constrained power-law extrapolation of learning curves.
"""
