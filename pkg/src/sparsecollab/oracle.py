"""Exhaustive-search ground truth for tiny networks.

Only meant for tests and validation runs: the search space grows as
``2**(N*(N-1))``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .model import QuadForms, diag_indices
from .spectral import fixed_topology_energy, fixed_topology_info


@dataclass
class EnumerationBudget:
    max_N: int = 4
    max_N_joint: int = 3
    max_supports: int = 1 << 20


@dataclass
class OracleResult:
    value: float
    support: list
    w: np.ndarray
    selected: list
    evaluated: int


def gray_masks(k: int):
    """All ``2**k`` bit masks in reflected Gray-code order."""
    for i in range(1 << k):
        yield i ^ (i >> 1)


def _offdiag(N: int, rows=None) -> np.ndarray:
    rows = range(N) if rows is None else rows
    return np.array([m * N + n for m in rows for n in range(N) if n != m], dtype=int)


def _supports(base: np.ndarray, optional: np.ndarray, budget: EnumerationBudget):
    if (1 << len(optional)) > budget.max_supports:
        raise ParameterError(f"{1 << len(optional)} supports exceed the enumeration budget")
    for mask in gray_masks(len(optional)):
        picked = [optional[i] for i in range(len(optional)) if mask >> i & 1]
        yield np.sort(np.concatenate([base, np.asarray(picked, dtype=int)]))


def _check_size(forms: QuadForms, limit: int) -> None:
    if forms.N > limit:
        raise ParameterError(f"exhaustive search refused for N={forms.N} (limit {limit})")


def exhaustive_info(forms: QuadForms, J_check: float, budget: EnumerationBudget | None = None) -> OracleResult:
    """Cheapest topology reaching ``J_check``; the free diagonal is always active."""
    budget = budget or EnumerationBudget()
    _check_size(forms, budget.max_N)
    N = forms.N
    best, count = None, 0
    for sup in _supports(diag_indices(N), _offdiag(N), budget):
        count += 1
        out = fixed_topology_info(forms, sup, J_check)
        if out is not None and (best is None or out[0] < best[0]):
            best = (out[0], sup, out[1])
    if best is None:
        return OracleResult(np.inf, [], np.zeros(forms.L), [], count)
    return OracleResult(best[0], best[1].tolist(), best[2], list(range(N)), count)


def exhaustive_energy(forms: QuadForms, P_hat: float, budget: EnumerationBudget | None = None) -> OracleResult:
    """Largest Fisher information over all topologies whose link cost fits in ``P_hat``."""
    budget = budget or EnumerationBudget()
    _check_size(forms, budget.max_N)
    N = forms.N
    best, count = None, 0
    for sup in _supports(diag_indices(N), _offdiag(N), budget):
        count += 1
        out = fixed_topology_energy(forms, sup, P_hat)
        if out is not None and (best is None or out[0] > best[0]):
            best = (out[0], sup, out[1])
    if best is None:
        return OracleResult(0.0, [], np.zeros(forms.L), [], count)
    return OracleResult(best[0], best[1].tolist(), best[2], list(range(N)), count)


def exhaustive_joint(forms: QuadForms, J_check: float, budget: EnumerationBudget | None = None) -> OracleResult:
    """Cheapest ``T + Q + S`` over row subsets and the links inside those rows.

    Rows outside the selected set are zero; links may come from any
    column, selected or not.
    """
    budget = budget or EnumerationBudget()
    _check_size(forms, budget.max_N_joint)
    N = forms.N
    if J_check <= 0:
        return OracleResult(0.0, [], np.zeros(forms.L), [], 1)
    best, count = None, 0
    for r in range(1, N + 1):
        for rows in itertools.combinations(range(N), r):
            base = np.array([n * (N + 1) for n in rows], dtype=int)
            sel_cost = float(forms.d[list(rows)].sum())
            for sup in _supports(base, _offdiag(N, rows), budget):
                count += 1
                out = fixed_topology_info(forms, sup, J_check)
                if out is None:
                    continue
                total = out[0] + sel_cost
                if best is None or total < best[0]:
                    best = (total, sup, out[1], list(rows))
    if best is None:
        return OracleResult(np.inf, [], np.zeros(forms.L), [], count)
    return OracleResult(best[0], best[1].tolist(), best[2], best[3], count)
