"""Computation services behind the CLI commands."""
