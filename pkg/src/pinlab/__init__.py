"""Numerics for a continuous-time directed pinning model: a walk rewarded
for sitting on a moving defect, with exact annealed solutions, a
finite-volume partition-function solver, renewal-based Monte Carlo, and
experiment drivers behind a command-line interface."""

__version__ = "0.1.0"
