"""
API v1 for the prediction service.
"""
