"""Bayesian Bradley-Terry-Davidson rankings as predictors in dynamic Poisson goal models."""

__version__ = "0.1.0"
