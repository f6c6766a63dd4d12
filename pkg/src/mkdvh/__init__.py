"""mKdV and Painlevé II hierarchies: symbolics, special functions and long-time asymptotics."""

__version__ = "0.1.0"
