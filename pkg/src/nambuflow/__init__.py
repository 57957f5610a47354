"""Nambu-Hamiltonian flows from algebraic maps.

Builds flows whose conserved Hamiltonians are the fixed constraints of a
polynomial map, integrates them, and checks closed-form elliptic and
hyper-elliptic solutions together with the discrete periodic Toda map.
The hot loops run in a compiled extension when it is built
(``nambuflow.backend`` reports which one is active).
"""
from ._backend import NAME as backend
from .flows import (FlowError, FlowSpec, MultiPoly, diagonal_flow, nambu_rhs, quadratic_flow,
                    symmetric_flow, symmetric_flow_free_i)
from .integrate import (IntegrationError, IntegratorConfig, Trajectory, conservation_report,
                        integrate, scalar_reduce, volume_check)
from .polycore import PolyError, SymConstants, UniPoly, discriminant, discriminant_in_W, resultant
from .special import (HyperEllipticProblem, SpecialError, circle_solution, diagonal_solution_n3,
                      elliptic_solution_x2_free, hyperelliptic_time, invert_hyperelliptic, jacobi)
from .toda import TodaError, TodaState, build_M, build_U, invariants_from_matrix, invariants_from_state, \
    reconstruct, step

__version__ = "0.1.0"

__all__ = [
    "backend", "FlowError", "FlowSpec", "MultiPoly", "diagonal_flow", "nambu_rhs", "quadratic_flow",
    "symmetric_flow", "symmetric_flow_free_i", "IntegrationError", "IntegratorConfig", "Trajectory",
    "conservation_report", "integrate", "scalar_reduce", "volume_check", "PolyError", "SymConstants",
    "UniPoly", "discriminant", "discriminant_in_W", "resultant", "HyperEllipticProblem", "SpecialError",
    "circle_solution", "diagonal_solution_n3", "elliptic_solution_x2_free", "hyperelliptic_time",
    "invert_hyperelliptic", "jacobi", "TodaError", "TodaState", "build_M", "build_U",
    "invariants_from_matrix", "invariants_from_state", "reconstruct", "step",
]
