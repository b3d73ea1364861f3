"""Quantum optimal control through truncated Magnus expansions and moment relaxations."""
from .algebra import commutator, exp_anti_hermitian, kron, log_unitary
from .lie import closure, is_operator_controllable
from .magnus import SystemSpec, Term, assemble, convergence_bound, discretize_term
from .pipeline import ControlProblem, PulseSolution, solve_control

__all__ = [
    "ControlProblem",
    "PulseSolution",
    "SystemSpec",
    "Term",
    "assemble",
    "closure",
    "commutator",
    "convergence_bound",
    "discretize_term",
    "exp_anti_hermitian",
    "is_operator_controllable",
    "kron",
    "log_unitary",
    "solve_control",
]

__version__ = "0.1.0"
