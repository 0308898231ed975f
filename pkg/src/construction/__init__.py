"""Staged polynomial construction of a dense-orbit function on the solenoid."""
