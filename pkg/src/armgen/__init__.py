"""Human-like arm trajectory generation and robot replay tools."""

__version__ = "0.1.0"
