"""Kernel inference, linear systems, exact propagators and solver plans."""

from .kernel import KernelOde, NotLinearKernel, Root, SingularSample, shape_to_ode
from .linear import LinearSystem, NotLinearConstant, build_linear_system, ode_scope
from .plan import Exact, Numeric, dynamics_scope, find_ode_block, make_solver_plan
from .propagator import PropagatorMatrix, SymbolicFailure, symbolic_expm_triangular

__all__ = ["KernelOde", "NotLinearKernel", "Root", "SingularSample", "shape_to_ode",
           "LinearSystem", "NotLinearConstant", "build_linear_system", "ode_scope",
           "Exact", "Numeric", "make_solver_plan", "dynamics_scope", "find_ode_block",
           "PropagatorMatrix", "SymbolicFailure", "symbolic_expm_triangular"]
