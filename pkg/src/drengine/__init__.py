"""Exact evaluation of Pixton's formula for the double ramification cycle
and certification of its polynomial dependence on the ramification data."""

__version__ = "0.1.0"
