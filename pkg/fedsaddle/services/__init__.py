"""Numerical services: data, problems, engine, metrics and reporting."""
