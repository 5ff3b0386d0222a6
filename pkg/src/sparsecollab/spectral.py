"""Generalized eigenproblems and the closed-form fixed-topology solutions.

Every pencil used here has one positive-definite side, so each problem is
reduced to a symmetric eigenproblem through the Cholesky factor of that
side.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, solve_triangular

from .errors import InfeasibleError, ParameterError
from .model import QuadForms, fisher_info, transmission_cost

log = logging.getLogger(__name__)

POSITIVE_CUTOFF = 1e-10


@dataclass
class GenEigResult:
    lam: float
    v: np.ndarray
    kind: str


def _sign_normalize(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > 1e-14 * max(np.max(np.abs(v)), 1e-300))
    if nz.size and v[nz[0]] < 0:
        return -v
    return v


def _chol_lower(A: np.ndarray, what: str) -> np.ndarray:
    try:
        c, _ = cho_factor(A, lower=True, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise ParameterError(f"{what} is not positive definite") from exc
    return np.tril(c)


def _reduced(Lc: np.ndarray, B: np.ndarray) -> np.ndarray:
    """``Lc^{-1} B Lc^{-T}``, symmetrized."""
    X = solve_triangular(Lc, B, lower=True)
    M = solve_triangular(Lc, X.T, lower=True)
    return 0.5 * (M + M.T)


def gen_eig_min_pos(A, B) -> GenEigResult | None:
    """Smallest positive eigenvalue of ``A v = lam B v`` with ``A`` PD.

    Returns ``None`` when the pencil has no positive eigenvalue.  Ties are
    broken by the ordering of :func:`numpy.linalg.eigh`.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    Lc = _chol_lower(A, "A")
    nu, X = np.linalg.eigh(_reduced(Lc, B))
    scale = np.max(np.abs(nu)) if nu.size else 0.0
    if scale == 0.0 or nu[-1] <= POSITIVE_CUTOFF * scale:
        return None
    v = solve_triangular(Lc.T, X[:, -1], lower=False)
    return GenEigResult(lam=1.0 / nu[-1], v=_sign_normalize(v), kind="min-positive")


def gen_eig_max(A, B) -> GenEigResult:
    """Largest eigenvalue of ``A v = lam B v`` with ``B`` PD."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    Lc = _chol_lower(B, "B")
    nu, X = np.linalg.eigh(_reduced(Lc, A))
    v = solve_triangular(Lc.T, X[:, -1], lower=False)
    return GenEigResult(lam=float(nu[-1]), v=_sign_normalize(v), kind="maximum")


def info_bound_J0(forms: QuadForms) -> float:
    """Supremum of the Fisher information over all collaboration vectors."""
    return max(gen_eig_max(forms.Omega_JN, forms.Omega_JD).lam, 0.0)


def min_distortion_D0(forms: QuadForms) -> float:
    return forms.eta2 / (1.0 + forms.eta2 * info_bound_J0(forms))


def _scale_to_energy(forms: QuadForms, v: np.ndarray, energy: float) -> np.ndarray:
    return np.sqrt(energy / float(v @ forms.Omega_T @ v)) * v


def fully_connected_info(forms: QuadForms, J_check: float) -> tuple[float, np.ndarray]:
    """Minimum energy ``P`` and its vector for a fully connected network at ``J >= J_check``."""
    if J_check <= 0:
        raise InfeasibleError(f"information threshold must be positive, got {J_check}")
    res = gen_eig_min_pos(forms.Omega_T, forms.Omega_JN / J_check - forms.Omega_JD)
    if res is None:
        raise InfeasibleError(f"J_check={J_check} is not below the reachable bound")
    T = res.lam * forms.xi2
    w = _scale_to_energy(forms, res.v, T)
    J = fisher_info(forms, w)
    if abs(J - J_check) > 1e-6 * J_check:
        log.warning("closed-form info solution misses target: J=%r, target=%r", J, J_check)
    return T + forms.total_link_cost, w


def fully_connected_energy(forms: QuadForms, P_hat: float) -> tuple[float, np.ndarray]:
    """Maximum Fisher information and its vector under budget ``P_hat`` (fully connected)."""
    budget = P_hat - forms.total_link_cost
    if budget <= 0:
        raise InfeasibleError(f"budget {P_hat} does not exceed the link cost {forms.total_link_cost}")
    res = gen_eig_max(forms.Omega_JN, forms.Omega_JD + forms.xi2 * forms.Omega_T / budget)
    w = _scale_to_energy(forms, res.v, budget)
    T = transmission_cost(forms, w)
    if abs(T - budget) > 1e-6 * budget:
        log.warning("closed-form energy solution misses budget: T=%r, budget=%r", T, budget)
    return res.lam, w


def _embed(L: int, idx: np.ndarray, w_sub: np.ndarray) -> np.ndarray:
    w = np.zeros(L)
    w[idx] = w_sub
    return w


def fixed_topology_info(forms: QuadForms, support, J_check: float) -> tuple[float, np.ndarray] | None:
    """Closed-form P1 restricted to ``support``; ``None`` if the topology cannot reach ``J_check``."""
    idx = np.unique(np.asarray(support, dtype=int))
    if idx.size == 0:
        return None
    try:
        P, w_sub = fully_connected_info(forms.restrict(idx), J_check)
    except InfeasibleError:
        return None
    return P, _embed(forms.L, idx, w_sub)


def fixed_topology_energy(forms: QuadForms, support, P_hat: float) -> tuple[float, np.ndarray] | None:
    """Closed-form P2 restricted to ``support``; ``None`` if the budget is below its link cost."""
    idx = np.unique(np.asarray(support, dtype=int))
    if idx.size == 0:
        return None
    try:
        J, w_sub = fully_connected_energy(forms.restrict(idx), P_hat)
    except InfeasibleError:
        return None
    return J, _embed(forms.L, idx, w_sub)


def restricted_J0(forms: QuadForms, support) -> float:
    idx = np.unique(np.asarray(support, dtype=int))
    if idx.size == 0:
        return 0.0
    return info_bound_J0(forms.restrict(idx))
