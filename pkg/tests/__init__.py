"""
Test suite for Accuracy Forecast.
"""
