"""
Command implementations behind manage.py.
"""
