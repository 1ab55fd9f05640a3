"""Two-sided variable-coefficient fractional diffusion: solvers and verification."""

__version__ = "0.1.0"
