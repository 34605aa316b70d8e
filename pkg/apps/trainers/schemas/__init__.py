"""
Trainer configuration schemas.
"""
