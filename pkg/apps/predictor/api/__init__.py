"""
API layer for the prediction service.
"""
