"""
snls-mix - spectral Galerkin simulator and coupling laboratory
for the weakly damped stochastic nonlinear Schrödinger equation on [0,1]
"""

__version__ = "0.1.0"
