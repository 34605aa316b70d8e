"""
SVR kernels, solver and model persistence.
"""
