"""
Final-accuracy predictor combining SVR and curve fitting.
"""
