"""Flexible data-center load scheduling in multi-period DC-OPF dispatch."""
