"""Markov chain quasi-Monte Carlo discrepancy laboratory.

Runs uniformly ergodic Markov chains from deterministic driver sequences,
measures chain and push-back discrepancies against delta-covers, and checks
the results against closed-form theoretical budgets.
"""

__version__ = "0.1.0"
