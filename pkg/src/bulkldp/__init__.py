"""Rate functions, phase diffusions, and Monte Carlo checks for the
Sine_beta and Sch_tau bulk point processes."""

__version__ = "0.1.0"
