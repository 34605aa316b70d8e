"""
Probability-matching hyper-parameter exploration.
"""
