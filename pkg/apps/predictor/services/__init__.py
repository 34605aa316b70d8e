"""
Prediction gate and evaluation services.
"""
