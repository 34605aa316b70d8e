"""
Explorer configuration, state and result schemas.
"""
