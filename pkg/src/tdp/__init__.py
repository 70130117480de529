"""Metaheuristic solvers for the template design problem."""
