"""
Power-law fit schemas.
"""
