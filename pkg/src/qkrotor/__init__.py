"""Gate-level simulation of the quantum kicked rotator with imperfect gates."""

__version__ = "0.1.0"
