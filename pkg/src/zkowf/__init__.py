"""Weak zero-knowledge protocols to one-way-function candidates, at desk scale.

The package builds candidate functions out of protocol simulators, inverts
them with exact or sampled oracles, and runs the resulting reductions to
check acceptance-probability bounds exactly or by seeded Monte Carlo.
"""

__version__ = "0.1.0"
