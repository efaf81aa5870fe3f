"""Routh reduction of Lagrangian systems with a cyclic coordinate."""
