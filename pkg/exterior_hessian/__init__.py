"""Exterior k-Hessian equations: truncated solver, continuation and level-set verification."""
