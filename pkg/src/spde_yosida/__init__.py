"""Yosida-regularized mild solvers for semilinear dissipative stochastic evolution equations."""
