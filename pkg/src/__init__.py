"""
hdinfer

Simultaneous inference for high-dimensional sparse linear and convex-loss
models: de-sparsified Lasso, multiplier bootstrap critical values, support
recovery, screening-based testing, step-down FWER control and a Monte Carlo
harness for simulation studies.
"""

__version__ = "0.1.0"
