"""Brute-force verification engines for the closed forms."""
