"""Greedy deterministic row-action solvers with heavy-ball momentum."""
