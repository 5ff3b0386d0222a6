"""Top-level solvers for the three sparse collaboration problems.

* :func:`solve_info_constrained` -- minimum energy under an information
  threshold (reweighted l1 around the nonconvex ADMM loop).
* :func:`solve_energy_constrained` -- maximum information under an energy
  budget (bisection on the information threshold).
* :func:`solve_joint` -- joint sensor selection and collaboration
  (reweighting, then linearization, then convex ADMM, innermost last).

Every solver finishes with a polish step: the fixed-topology problem is
re-solved in closed form on the extracted support, so the reported vector
is exactly sparse.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .admm import (
    AdmmConfig,
    LinearizedConstraint,
    admm_info,
    admm_joint,
    joint_penalty,
    prepare_info,
    prepare_joint,
)
from .errors import InfeasibleError, ParameterError
from .model import Metrics, QuadForms, compute_metrics, diag_indices, fisher_info, groups, unvec
from .qp1qc import RootSearchConfig
from .spectral import fixed_topology_energy, fixed_topology_info, fully_connected_info, info_bound_J0

log = logging.getLogger(__name__)

REPORT_VERSION = 1


@dataclass
class SolverConfig:
    rho: float = 20.0
    epsilon: float = 1e-3
    eps_rw: float = 1e-3
    eps_bi: float = 1e-3
    eps_ad: float = 1e-3
    eps_li: float = 1e-3
    max_admm: int = 500
    max_rw: int = 20
    max_bi: int = 64
    max_li: int = 20
    zero_tol: float = 1e-3
    root_grid_points: int = 64
    root_beyond_pole_decades: float = 4.0
    trace: bool = False
    adaptive_rho: bool = True

    def __post_init__(self):
        for name, val in asdict(self).items():
            if isinstance(val, bool):
                continue
            if not val > 0:
                raise ParameterError(f"solver setting {name} must be positive, got {val}")

    def admm(self) -> AdmmConfig:
        return AdmmConfig(
            rho=self.rho,
            eps_ad=self.eps_ad,
            max_iter=self.max_admm,
            root=RootSearchConfig(grid_points=self.root_grid_points,
                                  beyond_pole_decades=self.root_beyond_pole_decades),
            trace=self.trace,
            adaptive_rho=self.adaptive_rho,
        )


@dataclass
class SolveReport:
    kind: str
    target: dict
    w_final: np.ndarray
    support: list
    selected: list
    metrics: Metrics
    iterations: dict = field(default_factory=dict)
    converged: dict = field(default_factory=dict)
    status: str = "converged"
    wall_time: float = 0.0
    J0: float = float("nan")
    history: list = field(default_factory=list)
    admm_states: list = field(default_factory=list, repr=False)

    @property
    def W(self) -> np.ndarray:
        return unvec(self.w_final, self.metrics_N)

    @property
    def metrics_N(self) -> int:
        return int(round(math.sqrt(len(self.w_final))))

    def to_dict(self) -> dict:
        return {
            "version": REPORT_VERSION,
            "library_version": __version__,
            "kind": self.kind,
            "target": self.target,
            "status": self.status,
            "J0": self.J0,
            "w_final": [float(x) for x in self.w_final],
            "support": [int(i) for i in self.support],
            "selected": [int(i) for i in self.selected],
            "metrics": asdict(self.metrics),
            "iterations": self.iterations,
            "converged": self.converged,
            "wall_time": self.wall_time,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# topology helpers
# ---------------------------------------------------------------------------


def extract_topology(w, zero_tol: float = 1e-3, *, N: int | None = None, include_diagonal: bool = True):
    """Support and selected rows of ``w`` under the relative zero threshold.

    With ``include_diagonal`` (problems without selection) every diagonal
    index is part of the support.
    """
    w = np.asarray(w, dtype=float)
    if N is None:
        N = int(round(math.sqrt(w.size)))
    scale = zero_tol * max(1.0, float(np.max(np.abs(w)))) if w.size else zero_tol
    support = set(np.flatnonzero(np.abs(w) > scale).tolist())
    row_norms = np.linalg.norm(unvec(w, N), axis=1)
    selected = np.flatnonzero(row_norms > scale).tolist()
    if include_diagonal:
        support |= set(diag_indices(N).tolist())
    return sorted(support), selected


def _joint_support(v, zero_tol: float, N: int):
    """Entries of the selected rows of ``v`` plus the (free) diagonals of those rows."""
    support, selected = extract_topology(v, zero_tol, N=N, include_diagonal=False)
    rows = set(selected)
    kept = {l for l in support if l // N in rows}
    kept |= {n * (N + 1) for n in rows}
    return sorted(kept), sorted(rows)


def polish(forms: QuadForms, support, *, J_check: float | None = None, P_hat: float | None = None):
    """Exact fixed-topology solution on ``support``; ``None`` when infeasible."""
    if (J_check is None) == (P_hat is None):
        raise ValueError("give exactly one of J_check or P_hat")
    if J_check is not None:
        out = fixed_topology_info(forms, support, J_check)
    else:
        out = fixed_topology_energy(forms, support, P_hat)
    return None if out is None else out[1]


def _report(kind, target, forms, w, J0, cfg, *, joint=False, **extra) -> SolveReport:
    metrics = compute_metrics(forms, w, J0, zero_tol=cfg.zero_tol, joint=joint)
    support, selected = extract_topology(w, cfg.zero_tol, N=forms.N, include_diagonal=False)
    return SolveReport(kind=kind, target=target, w_final=np.asarray(w, dtype=float), support=support,
                       selected=selected, metrics=metrics, J0=J0, **extra)


def _check_threshold(J_check: float, J0: float) -> None:
    if not J_check < J0:
        raise InfeasibleError(f"information threshold {J_check} is not below J0={J0}")
    if J_check < 0:
        raise InfeasibleError(f"information threshold must be nonnegative, got {J_check}")


# ---------------------------------------------------------------------------
# information constrained collaboration
# ---------------------------------------------------------------------------


def solve_info_constrained(forms: QuadForms, J_check: float, config: SolverConfig | None = None) -> SolveReport:
    cfg = config or SolverConfig()
    t0 = time.perf_counter()
    J0 = info_bound_J0(forms)
    _check_threshold(J_check, J0)
    target = {"J_check": float(J_check)}
    if J_check == 0:
        return _report("info", target, forms, np.zeros(forms.L), J0, cfg)

    _, w_tilde = fully_connected_info(forms, J_check)
    admm_cfg = cfg.admm()
    prepared = prepare_info(forms, J_check, admm_cfg)

    w = w_tilde
    alpha = np.ones(forms.L)
    candidates: list[tuple[int, ...]] = []
    admm_iters, states = [], []
    rw_converged = False
    for t in range(cfg.max_rw):
        w_new, st = admm_info(forms, J_check, alpha, w, admm_cfg, prepared=prepared)
        admm_iters.append(st.k)
        states.append(st)
        sup, _ = extract_topology(st.v, cfg.zero_tol, N=forms.N)
        candidates.append(tuple(sup))
        step = float(np.linalg.norm(w_new - w))
        w = w_new
        alpha = 1.0 / (np.abs(w) + cfg.epsilon)
        if t > 0 and step < cfg.eps_rw:
            rw_converged = True
            break

    best = _best_info_polish(forms, J_check, candidates)
    status = "converged" if rw_converged and all(s.converged for s in states) else "nonconverged"
    if best is None:
        log.warning("no extracted topology reaches J_check=%g; keeping the unpolished iterate", J_check)
        w_final, status = w, "polish_failed"
    else:
        w_final = best
    rep = _report(
        "info", target, forms, w_final, J0, cfg,
        iterations={"reweighting": len(admm_iters), "admm": admm_iters},
        converged={"reweighting": rw_converged, "admm": all(s.converged for s in states)},
        status=status,
        admm_states=states if cfg.trace else [],
    )
    rep.wall_time = time.perf_counter() - t0
    return rep


def _best_info_polish(forms: QuadForms, J_check: float, candidates) -> np.ndarray | None:
    best = None
    for sup in dict.fromkeys(candidates):
        out = _prune_links(forms, J_check, sup)
        if out is not None and (best is None or out[0] < best[0]):
            best = out
    return None if best is None else best[1]


def _prune_links(forms: QuadForms, J_check: float, sup):
    """Polish ``sup`` and drop off-diagonal links one at a time while the energy falls."""
    N = forms.N
    sup = tuple(sup)
    cur = fixed_topology_info(forms, list(sup), J_check)
    while cur is not None:
        step = None
        for l in sup:
            if l // N == l % N:
                continue
            cand = tuple(x for x in sup if x != l)
            out = fixed_topology_info(forms, list(cand), J_check)
            if out is not None and out[0] < cur[0] - 1e-12 and (step is None or out[0] < step[0][0]):
                step = (out, cand)
        if step is None:
            break
        cur, sup = step
    return cur


# ---------------------------------------------------------------------------
# energy constrained collaboration
# ---------------------------------------------------------------------------


def solve_energy_constrained(forms: QuadForms, P_hat: float, config: SolverConfig | None = None) -> SolveReport:
    cfg = config or SolverConfig()
    t0 = time.perf_counter()
    if not P_hat > 0:
        raise ParameterError(f"energy budget must be positive, got {P_hat}")
    J0 = info_bound_J0(forms)
    target = {"P_hat": float(P_hat)}

    lo, hi = 0.0, J0
    history = []
    topologies: list[tuple[int, ...]] = []
    n_iter = 0
    while n_iter < cfg.max_bi:
        mid = 0.5 * (lo + hi)
        rep = solve_info_constrained(forms, mid, cfg)
        P = rep.metrics.P
        n_iter += 1
        sup, _ = extract_topology(rep.w_final, cfg.zero_tol, N=forms.N)
        topologies.append(tuple(sup))
        history.append({"J_check": mid, "P": P, "links": rep.metrics.links})
        if P < P_hat:
            lo = mid
        else:
            hi = mid
        if hi - lo < cfg.eps_bi or abs(P_hat - P) < cfg.eps_bi:
            break
    bi_converged = hi - lo < cfg.eps_bi or abs(P_hat - history[-1]["P"]) < cfg.eps_bi

    # the final topology first, then every topology met along the way
    best = None
    for sup in dict.fromkeys(reversed(topologies)):
        out = fixed_topology_energy(forms, sup, P_hat)
        if out is not None and (best is None or out[0] > best[0] + 1e-12):
            best = out
    if best is None:
        rep = _report("energy", target, forms, np.zeros(forms.L), J0, cfg, status="infeasible",
                      iterations={"bisection": n_iter}, converged={"bisection": bi_converged}, history=history)
    else:
        rep = _report("energy", target, forms, best[1], J0, cfg,
                      status="converged" if bi_converged else "nonconverged",
                      iterations={"bisection": n_iter}, converged={"bisection": bi_converged}, history=history)
    rep.wall_time = time.perf_counter() - t0
    return rep


def bisection_bound(J0: float, eps_bi: float) -> int:
    return max(1, math.ceil(math.log2(J0 / eps_bi)))


# ---------------------------------------------------------------------------
# joint selection and collaboration
# ---------------------------------------------------------------------------


def joint_objective(forms: QuadForms, w, tau, delta) -> float:
    """Weighted surrogate minimized by the linearization loop."""
    w = np.asarray(w, dtype=float)
    pen = joint_penalty(np.asarray(tau) * forms.c, np.asarray(delta) * forms.d, forms.N)
    return float(w @ forms.Omega_T @ w) + pen(w)


def _joint_total(forms: QuadForms, J_check: float, sup, rows):
    out = fixed_topology_info(forms, list(sup), J_check)
    if out is None:
        return None
    return out[0] + float(forms.d[list(rows)].sum()), out[1]


def _prune_joint(forms: QuadForms, J_check: float, sup, rows):
    """Greedy descent from a polished candidate: drop the row or link that helps most.

    The linearization only moves locally, so a selection that is cheaper
    after removing a whole sensor is often not reached by the iterations.
    """
    N = forms.N
    sup, rows = tuple(sup), tuple(rows)
    cur = _joint_total(forms, J_check, sup, rows)
    while cur is not None:
        moves = [(tuple(l for l in sup if l // N != n), tuple(r for r in rows if r != n)) for n in rows]
        moves += [(tuple(x for x in sup if x != l), rows) for l in sup if l // N != l % N]
        step = None
        for cand in moves:
            if not cand[1]:
                continue
            out = _joint_total(forms, J_check, *cand)
            if out is not None and out[0] < cur[0] - 1e-12 and (step is None or out[0] < step[0][0]):
                step = (out, cand)
        if step is None:
            break
        cur, (sup, rows) = step
    return cur


def solve_joint(forms: QuadForms, J_check: float, config: SolverConfig | None = None, observer=None) -> SolveReport:
    """Joint sensor selection and collaboration under ``J(w) >= J_check``.

    ``observer``, if given, is called as ``observer(t, s, w, lin)`` with each
    accepted linearization iterate.
    """
    cfg = config or SolverConfig()
    t0 = time.perf_counter()
    J0 = info_bound_J0(forms)
    _check_threshold(J_check, J0)
    target = {"J_check": float(J_check)}
    N = forms.N
    if J_check == 0:
        return _report("joint", target, forms, np.zeros(forms.L), J0, cfg, joint=True)

    _, w_tilde = fully_connected_info(forms, J_check)
    admm_cfg = cfg.admm()
    prepared = prepare_joint(forms, J_check, admm_cfg)

    w = w_tilde
    v = w_tilde
    tau = np.ones(forms.L)
    delta = np.ones(N)
    history, candidates = [], []
    li_counts, admm_counts, states = [], [], []
    rw_converged = False
    all_admm_converged = True
    for t in range(cfg.max_rw):
        w_start = w
        phi_prev = joint_objective(forms, w, tau, delta)
        history.append({"t": t, "s": 0, "phi": phi_prev})
        n_li = 0
        for s in range(1, cfg.max_li + 1):
            lin = LinearizedConstraint.around(forms, J_check, w)
            w_new, st = admm_joint(forms, lin, tau, delta, w, admm_cfg, prepared=prepared)
            admm_counts.append(st.k)
            if cfg.trace:
                states.append(st)
            all_admm_converged &= st.converged
            n_li = s
            phi_new = joint_objective(forms, w_new, tau, delta)
            if phi_new > phi_prev:
                # inexact inner solve; keep the previous linearization point
                history.append({"t": t, "s": s, "phi": phi_prev, "rejected": phi_new})
                break
            w, v = w_new, st.v
            history.append({"t": t, "s": s, "phi": phi_new,
                            "lin_constraint": lin.value(w), "info_margin": fisher_info(forms, w) - J_check})
            if observer is not None:
                observer(t, s, w, lin)
            done = abs(phi_new - phi_prev) < cfg.eps_li
            phi_prev = phi_new
            if done:
                break
        li_counts.append(n_li)
        candidates.append(_joint_support(v, cfg.zero_tol, N))
        tau = 1.0 / (np.abs(w) + cfg.epsilon)
        delta = 1.0 / (np.array([np.linalg.norm(w[G]) for G in groups(N)]) + cfg.epsilon)
        if t > 0 and np.linalg.norm(w - w_start) < cfg.eps_rw:
            rw_converged = True
            break

    best = None
    for sup, rows in dict.fromkeys((tuple(s), tuple(r)) for s, r in candidates):
        out = _prune_joint(forms, J_check, sup, rows)
        if out is not None and (best is None or out[0] < best[0]):
            best = out
    status = "converged" if rw_converged and all_admm_converged else "nonconverged"
    if best is None:
        log.warning("no extracted selection reaches J_check=%g; keeping the unpolished iterate", J_check)
        w_final, status = w, "polish_failed"
    else:
        w_final = best[1]
    rep = _report(
        "joint", target, forms, w_final, J0, cfg, joint=True,
        iterations={"reweighting": len(li_counts), "linearization": li_counts, "admm": admm_counts},
        converged={"reweighting": rw_converged, "admm": all_admm_converged},
        status=status, history=history, admm_states=states,
    )
    rep.wall_time = time.perf_counter() - t0
    return rep
