"""Variational calculus on arc spaces with odd variables: λ-brackets, Schouten
brackets, R-matrix deformations and numerical checks of the resulting flows."""

from .algebra import Context, DiffPoly, Generator, ParamPoly, even, odd
from .errors import QPVAError
from .frontend import parse, parse_lambda, parse_table, print_canonical
from .lambdas import (HamOperator, LambdaMuPoly, LambdaPoly, RMatrix, deform_bracket, is_jacobi, is_skew,
                      jacobi_check, master_bracket, operator_to_density, skew_check)
from .schouten import LocalFunctional, constraint_ideal, derived_bracket, is_hamiltonian, mc_residual, nrb_bracket
from .variational import euler_even, euler_odd, is_exact, normalize2

__version__ = "0.1.0"

__all__ = [
    "Context", "DiffPoly", "Generator", "ParamPoly", "even", "odd", "QPVAError",
    "parse", "parse_lambda", "parse_table", "print_canonical",
    "HamOperator", "LambdaMuPoly", "LambdaPoly", "RMatrix", "deform_bracket", "is_jacobi", "is_skew",
    "jacobi_check", "master_bracket", "operator_to_density", "skew_check",
    "LocalFunctional", "constraint_ideal", "derived_bracket", "is_hamiltonian", "mc_residual", "nrb_bracket",
    "euler_even", "euler_odd", "is_exact", "normalize2",
]
