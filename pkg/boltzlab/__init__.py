"""
Numerical laboratory for entropy dissipation estimates of the Boltzmann operator.
"""

__version__ = "0.1.0"
