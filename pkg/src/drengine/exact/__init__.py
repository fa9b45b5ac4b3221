"""Exact arithmetic substrate: rationals are :class:`fractions.Fraction`."""

from fractions import Fraction

from .interpolate import (
    admissible_nodes,
    fit_many_on_lattice,
    fit_poly_on_lattice,
    is_prime,
    lagrange_interpolate,
    lattice_monomials,
    simplex_design,
    stable_interpolation,
)
from .linalg import solve_exact
from .poly import MultiPoly, parse_poly, poly_sum, rational_from_json, rational_to_json, var_key
from .series import PSeries, binomial_reexpansion, edge_factor_series, exp_series
from .summation import bernoulli_plus, power_sum, sum_range_closed_form

__all__ = [
    "Fraction",
    "MultiPoly",
    "PSeries",
    "admissible_nodes",
    "bernoulli_plus",
    "binomial_reexpansion",
    "edge_factor_series",
    "exp_series",
    "fit_many_on_lattice",
    "fit_poly_on_lattice",
    "is_prime",
    "lagrange_interpolate",
    "lattice_monomials",
    "parse_poly",
    "poly_sum",
    "power_sum",
    "rational_from_json",
    "rational_to_json",
    "simplex_design",
    "solve_exact",
    "stable_interpolation",
    "sum_range_closed_form",
    "var_key",
]
