"""
Prediction and evaluation schemas.
"""
