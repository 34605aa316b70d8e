"""
Trainers producing learning curves for hyper-parameter settings.
"""
