"""
Static SVG charts.
"""
