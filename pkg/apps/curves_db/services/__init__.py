"""
Database building, sampling, splitting and CSV persistence.
"""
