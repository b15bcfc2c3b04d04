"""Shannon entropy and mutual information from exact model counts.

Secrets are uniformly distributed over the models of the knowledge
constraint ``C_h``, so ``H = log2 #C_h`` and an observation class ``o``
has probability ``#(C_h & psi_o[l -> l_val]) / #C_h``.
"""
from __future__ import annotations

import math
from typing import Sequence

from .constraints import Constraint
from .counting import ModelCounter


class InfeasibleKnowledgeError(ArithmeticError):
    """The knowledge constraint has no models; the true secret was excluded."""


def log2_int(n: int) -> float:
    """log2 of a positive integer of any size, to double precision."""
    if n <= 0:
        raise ValueError("log2 of a nonpositive integer")
    shift = max(n.bit_length() - 64, 0)
    return math.log2(n >> shift) + shift


def entropy_of_count(n: int) -> float:
    if n < 1:
        raise InfeasibleKnowledgeError("knowledge constraint is unsatisfiable")
    return 0.0 if n == 1 else log2_int(n)


def class_counts(c_h: Constraint, psis: Sequence[Constraint], l_val: str,
                 counter: ModelCounter) -> list[int]:
    """``#(C_h & psi_i[l -> l_val])`` for every observation class."""
    return [counter.count_query(c_h, psi, l_val) for psi in psis]


def conditional_entropy_of_counts(counts: Sequence[int], total: int) -> float:
    if total < 1:
        raise InfeasibleKnowledgeError("knowledge constraint is unsatisfiable")
    # 0 log 0 := 0
    return sum((c / total) * log2_int(c) for c in counts if c > 1)


def mutual_info_of_counts(counts: Sequence[int], total: int) -> float:
    h = entropy_of_count(total)
    return max(0.0, h - conditional_entropy_of_counts(counts, total))


def observation_distribution(counts: Sequence[int], total: int) -> list[float]:
    return [c / total for c in counts]


def entropy(c_h: Constraint, counter: ModelCounter) -> float:
    return entropy_of_count(counter.count_high(c_h))


def conditional_entropy(c_h: Constraint, psis: Sequence[Constraint], l_val: str,
                        counter: ModelCounter) -> float:
    if not psis:
        raise ValueError("need at least one observation class")
    total = counter.count_high(c_h)
    return conditional_entropy_of_counts(class_counts(c_h, psis, l_val, counter), total)


def mutual_info(c_h: Constraint, psis: Sequence[Constraint], l_val: str,
                counter: ModelCounter) -> float:
    if not psis:
        raise ValueError("need at least one observation class")
    total = counter.count_high(c_h)
    return mutual_info_of_counts(class_counts(c_h, psis, l_val, counter), total)
