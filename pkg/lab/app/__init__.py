"""Simulation lab for domain Markov half-planar triangulations"""
__version__ = "0.3.0"
