"""
Power-law fitting services.
"""
