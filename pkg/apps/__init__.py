"""
Application modules of the accuracy forecasting pipeline.
"""
