"""
Core settings, logging and exceptions shared by the CLI and the HTTP service.
"""
