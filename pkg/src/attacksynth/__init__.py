"""Adaptive side-channel attack synthesis over string constraints."""
from .automata import Dfa, from_constraint
from .constraints import Domain, H, L, Var, canonical_key, free_variables, substitute
from .counting import DfaCache, ModelCounter, model_count, model_count_incremental
from .dsl import parse_constraint, parse_program, serialize
from .engine import SAParams, generate_constraints, run_attack

__all__ = [
    "Dfa", "DfaCache", "Domain", "H", "L", "ModelCounter", "SAParams", "Var",
    "canonical_key", "free_variables", "from_constraint", "generate_constraints",
    "model_count", "model_count_incremental", "parse_constraint", "parse_program",
    "run_attack", "serialize", "substitute",
]
