"""Exact Bayesian opinion-exchange simulator and reduction compiler."""
