"""
Carousel Bandit Simulator - Python package for comparing bandit policies on personalised carousels.
"""

__version__ = '0.1.0'
