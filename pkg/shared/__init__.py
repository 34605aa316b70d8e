"""
Shared utilities used across the application modules.
"""
