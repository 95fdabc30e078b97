"""Growth and branching exponents for rule-defined infinite trees."""

__version__ = "0.1.0"
