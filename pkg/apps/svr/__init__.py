"""
Epsilon-insensitive support vector regression.
"""
