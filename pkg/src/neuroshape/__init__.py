"""Noise shaping with coupled integrate-and-fire networks.

Simulation, spectral analysis, genetic weight optimization, accumulator
post-processing and a first-order delta-sigma reference.
"""
__version__ = "0.1.0"
