"""
Hyper-parameter grid and the database of full-training records.
"""
