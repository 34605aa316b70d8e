"""
Exploration services.
"""
