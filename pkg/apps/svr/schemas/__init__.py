"""
Kernel, hyper-parameter and model schemas for SVR.
"""
