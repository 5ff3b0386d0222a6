"""ADMM loops for the weighted-l1 subproblems and their proximal operators."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import SolverError
from .model import QuadForms, fisher_info, groups
from .qp1qc import PreparedQp1qc, RootSearchConfig

log = logging.getLogger(__name__)


@dataclass
class AdmmConfig:
    rho: float = 20.0
    eps_ad: float = 1e-3
    max_iter: int = 500
    root: RootSearchConfig = field(default_factory=RootSearchConfig)
    trace: bool = False
    # penalty escalation when the nonconvex w-step makes the iteration cycle
    adaptive_rho: bool = True
    rho_growth: float = 2.0
    rho_max: float = 2e4
    stall_window: int = 40


class PreparedFamily:
    """``PreparedQp1qc`` factorizations keyed by the penalty ``rho``."""

    def __init__(self, build):
        self._build = build
        self._cache: dict[float, PreparedQp1qc] = {}

    def __call__(self, rho: float) -> PreparedQp1qc:
        if rho not in self._cache:
            self._cache[rho] = self._build(rho)
        return self._cache[rho]


@dataclass
class AdmmState:
    w: np.ndarray
    v: np.ndarray
    chi: np.ndarray
    rho: float
    k: int = 0
    rho_changes: list = field(default_factory=list)
    primal_res: list = field(default_factory=list)
    dual_res: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    merit: list = field(default_factory=list)
    converged: bool = False

    def write_trace(self, path) -> None:
        """Per-iteration CSV: ``k, primal_residual, dual_residual, objective``."""
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["k", "primal_residual", "dual_residual", "objective"])
            for k, row in enumerate(zip(self.primal_res, self.dual_res, self.objective), start=1):
                out.writerow([k, *(f"{x:.12g}" for x in row)])


@dataclass(frozen=True)
class LinearizedConstraint:
    """Convex restriction of the information constraint around ``beta``.

    ``w^T Omega_JD_tilde w - 2 beta_tilde^T w + gamma_tilde <= 0``.
    """

    Omega_JD_tilde: np.ndarray
    beta_tilde: np.ndarray
    gamma_tilde: float
    beta: np.ndarray

    @classmethod
    def around(cls, forms: QuadForms, J_check: float, beta) -> "LinearizedConstraint":
        beta = np.asarray(beta, dtype=float)
        bt = forms.Omega_JN @ beta
        return cls(
            Omega_JD_tilde=J_check * forms.Omega_JD,
            beta_tilde=bt,
            gamma_tilde=float(beta @ bt) + J_check * forms.xi2,
            beta=beta,
        )

    def value(self, w) -> float:
        w = np.asarray(w, dtype=float)
        return float(w @ self.Omega_JD_tilde @ w - 2 * self.beta_tilde @ w + self.gamma_tilde)


def soft_threshold(b, theta):
    """Entrywise prox of ``sum theta_l |v_l|`` (with unit quadratic weight)."""
    b = np.asarray(b, dtype=float)
    theta = np.broadcast_to(np.asarray(theta, dtype=float), b.shape)
    return np.sign(b) * np.maximum(np.abs(b) - theta, 0.0)


def block_soft_threshold(b_G, f_G, d_tilde: float, rho: float):
    """Minimizer of ``||diag(f_G) v||_1 + d_tilde ||v||_2 + rho/2 ||v - b_G||^2``.

    Entrywise shrinkage by ``f_G / rho`` followed by group shrinkage by ``d_tilde / rho``.
    """
    nu = soft_threshold(b_G, np.asarray(f_G, dtype=float) / rho)
    norm = np.linalg.norm(nu)
    kappa = d_tilde / rho
    if norm == 0.0 or norm < kappa:
        return np.zeros_like(nu)
    return (1.0 - kappa / norm) * nu


def _stalled(st: AdmmState, history: list, window: int) -> bool:
    """Two-cycle in w, or no real progress in the primal residual over ``window`` steps."""
    if len(history) >= 3:
        w2 = history[-3]
        if np.linalg.norm(st.w - w2) < 1e-9 * (1.0 + np.linalg.norm(st.w)) and st.primal_res[-1] > 1e-6:
            return True
    if len(st.primal_res) > window:
        last = st.primal_res[-1]
        return last > 0.9 * st.primal_res[-1 - window]
    return False


def _run(family: "PreparedFamily", b1, r1, v_step, penalty, forms: QuadForms, w0, cfg: AdmmConfig,
         accept=lambda w: True) -> tuple[np.ndarray, AdmmState]:
    rho = cfg.rho
    w = np.asarray(w0, dtype=float).copy()
    st = AdmmState(w=w, v=w.copy(), chi=np.zeros_like(w), rho=rho)
    best = None
    history: list = []
    since_change = 0
    for k in range(1, cfg.max_iter + 1):
        a = st.v - st.chi / rho
        try:
            res = family(rho).solve(-0.5 * rho * a, b1, r1)
        except SolverError as exc:
            exc.diagnostics["admm_iteration"] = k
            exc.diagnostics["primal_res"] = list(st.primal_res)
            raise
        w_new = res.w
        v_new = v_step(w_new + st.chi / rho, rho)
        chi_new = st.chi + rho * (w_new - v_new)

        r_primal = float(np.linalg.norm(w_new - v_new))
        r_dual = float(np.linalg.norm(v_new - st.v))
        obj = float(w_new @ forms.Omega_T @ w_new) + penalty(w_new)
        st.w, st.v, st.chi, st.k = w_new, v_new, chi_new, k
        st.primal_res.append(r_primal)
        st.dual_res.append(r_dual)
        st.objective.append(obj)
        st.merit.append(
            float(w_new @ forms.Omega_T @ w_new) + penalty(v_new)
            + float(chi_new @ (w_new - v_new)) + 0.5 * rho * r_primal**2
        )
        history = (history + [w_new])[-3:]
        since_change += 1
        if accept(w_new) and (best is None or obj < best[0]):
            best = (obj, w_new.copy(), v_new.copy())
        if r_primal <= cfg.eps_ad and r_dual <= cfg.eps_ad:
            st.converged = True
            break
        if cfg.adaptive_rho and since_change > 2 and rho * cfg.rho_growth <= cfg.rho_max and \
                _stalled(st, history, min(cfg.stall_window, since_change - 1)):
            rho *= cfg.rho_growth
            st.rho = rho
            st.rho_changes.append(k)
            since_change = 0
            log.debug("ADMM stalled at k=%d; rho -> %g", k, rho)
    if not st.converged:
        log.info("ADMM stopped at max_iter=%d (primal %.3g, dual %.3g)", cfg.max_iter,
                 st.primal_res[-1], st.dual_res[-1])
        if best is not None:
            st.w, st.v = best[1], best[2]
    return st.w, st


def admm_info(forms: QuadForms, J_check: float, alpha, w0, cfg: AdmmConfig | None = None,
              prepared: PreparedFamily | None = None) -> tuple[np.ndarray, AdmmState]:
    """ADMM for ``min w^T Omega_T w + ||diag(alpha*c) w||_1  s.t.  J(w) >= J_check``.

    The w-step is a nonconvex QP1QC, the v-step soft thresholding.
    Returns the last w-iterate, which is always information-feasible.
    """
    cfg = cfg or AdmmConfig()
    if prepared is None:
        prepared = prepare_info(forms, J_check, cfg)
    theta = np.asarray(alpha, dtype=float) * forms.c
    r1 = J_check * forms.xi2
    b1 = np.zeros(forms.L)
    feasible = lambda w: fisher_info(forms, w) >= J_check * (1 - 1e-9)  # noqa: E731
    return _run(
        prepared, b1, r1,
        v_step=lambda b, rho: soft_threshold(b, theta / rho),
        penalty=lambda x: float(np.sum(theta * np.abs(x))),
        forms=forms, w0=w0, cfg=cfg, accept=feasible,
    )


def prepare_info(forms: QuadForms, J_check: float, cfg: AdmmConfig | None = None) -> PreparedFamily:
    cfg = cfg or AdmmConfig()
    A1 = J_check * forms.Omega_JD - forms.Omega_JN
    eye = np.eye(forms.L)
    return PreparedFamily(lambda rho: PreparedQp1qc(forms.Omega_T + 0.5 * rho * eye, A1, cfg.root))


def prepare_joint(forms: QuadForms, J_check: float, cfg: AdmmConfig | None = None) -> PreparedFamily:
    cfg = cfg or AdmmConfig()
    A1 = J_check * forms.Omega_JD
    eye = np.eye(forms.L)
    return PreparedFamily(lambda rho: PreparedQp1qc(forms.Omega_T + 0.5 * rho * eye, A1, cfg.root))


def group_prox(b, f, d_tilde, N: int, rho: float) -> np.ndarray:
    v = np.empty_like(np.asarray(b, dtype=float))
    for n, G in enumerate(groups(N)):
        v[G] = block_soft_threshold(b[G], f[G], d_tilde[n], rho)
    return v


def joint_penalty(f, d_tilde, N: int):
    def pen(x):
        return float(np.sum(f * np.abs(x))) + float(sum(d_tilde[n] * np.linalg.norm(x[G]) for n, G in enumerate(groups(N))))
    return pen


def admm_joint(forms: QuadForms, lin: LinearizedConstraint, tau, delta, w0, cfg: AdmmConfig | None = None,
               prepared: PreparedFamily | None = None, J_check: float | None = None) -> tuple[np.ndarray, AdmmState]:
    """ADMM for the linearized (convex) joint selection/collaboration subproblem.

    ``tau`` weights the link costs entrywise and ``delta`` the selection
    costs per row group.  The w-step is a convex QP1QC, the v-step block
    soft thresholding per row of W.
    """
    cfg = cfg or AdmmConfig()
    if prepared is None:
        if J_check is None:
            raise ValueError("either prepared or J_check is required")
        prepared = prepare_joint(forms, J_check, cfg)
    f = np.asarray(tau, dtype=float) * forms.c
    d_tilde = np.asarray(delta, dtype=float) * forms.d
    N = forms.N
    feasible = lambda w: lin.value(w) <= 1e-7 * (1 + lin.gamma_tilde)  # noqa: E731
    return _run(
        prepared, -lin.beta_tilde, lin.gamma_tilde,
        v_step=lambda b, rho: group_prox(b, f, d_tilde, N, rho),
        penalty=joint_penalty(f, d_tilde, N),
        forms=forms, w0=w0, cfg=cfg, accept=feasible,
    )
