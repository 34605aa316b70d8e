"""
Synthetic and classifier trainers, optimizers and early stopping.
"""
