"""Symbolic-numeric toolkit for the variable-coefficient Gardner equation."""

__version__ = "0.1.0"
