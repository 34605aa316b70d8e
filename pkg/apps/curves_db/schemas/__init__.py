"""
Schemas for grid axes, settings, learning curves and databases.
"""
