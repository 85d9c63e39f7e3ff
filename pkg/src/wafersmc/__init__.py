"""Closed-loop simulation of fractional-order variable-gain super-twisting
control (and its comparison controllers) for a single-axis wafer stage."""

__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: E402
