"""Public-opinion early warning: indicator screening, grey relational grading
and a Levenberg-Marquardt trained warning network."""

__version__ = "0.1.0"
