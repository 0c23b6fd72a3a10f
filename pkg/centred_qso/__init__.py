"""
Simulation and numerical verification of centred quadratic stochastic operators.
"""

__version__ = "0.1.0"
