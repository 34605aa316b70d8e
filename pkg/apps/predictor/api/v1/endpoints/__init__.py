"""
Prediction endpoints.
"""
