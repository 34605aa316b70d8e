"""
Run configuration schema.
"""
