"""Simulation and numerical checks for the frog model on d-ary trees."""
