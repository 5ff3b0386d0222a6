"""KKT solver for quadratic programs with one quadratic constraint.

Problem::

    minimize    w^T A0 w + 2 b0^T w
    subject to  w^T A1 w + 2 b1^T w + r1 <= 0

with ``A0`` positive definite and ``A1`` symmetric (possibly indefinite).
With ``w = A0^{-1/2} U u`` and ``U diag(lam) U^T = A0^{-1/2} A1 A0^{-1/2} / r1``
the problem becomes ``min u^T u + 2 g^T u  s.t.  u^T diag(lam) u + 2 e^T u + 1 <= 0``,
whose stationary points are ``u(mu) = -(I + mu diag(lam))^{-1} (g + mu e)``.
The multiplier is a root of the secular function ``f(mu) = c(u(mu))``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import ParameterError, SolverError

log = logging.getLogger(__name__)

EPS_POLE = 1e-9
HARD_CASE_TOL = 1e-10


@dataclass(frozen=True)
class Qp1qcInstance:
    A0: np.ndarray
    b0: np.ndarray
    A1: np.ndarray
    b1: np.ndarray
    r1: float


@dataclass(frozen=True)
class SecularProblem:
    """Diagonalized KKT data. ``sigma`` is the sign of ``r1`` (1 in every use here)."""

    lam: np.ndarray
    g: np.ndarray
    e: np.ndarray
    sigma: float = 1.0

    def u(self, mu: float) -> np.ndarray:
        return -(self.g + mu * self.e) / (1.0 + mu * self.lam)

    def __call__(self, mu):
        """Constraint value at ``u(mu)``; vectorized over ``mu``."""
        mu = np.asarray(mu, dtype=float)
        m = mu[..., None]
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            u = -(self.g + m * self.e) / (1.0 + m * self.lam)
            val = np.sum(self.lam * u * u + 2.0 * self.e * u, axis=-1) + self.sigma
        return val

    def derivative(self, mu: float) -> float:
        den = 1.0 + mu * self.lam
        u = -(self.g + mu * self.e) / den
        du = -(self.e - self.lam * self.g) / den**2
        return float(np.sum((2.0 * self.lam * u + 2.0 * self.e) * du))

    @property
    def scale(self) -> float:
        return 1.0 + float(np.sum(np.abs(self.lam * self.g**2))) + float(np.sum(np.abs(self.e * self.g)))


@dataclass
class RootSearchConfig:
    grid_points: int = 64
    beyond_pole_decades: float = 4.0
    near_offset: float = 1e-12


@dataclass
class Qp1qcResult:
    w: np.ndarray
    mu: float
    objective: float
    constraint: float
    branch: str
    roots: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)


def _poles(p: SecularProblem) -> np.ndarray:
    neg = p.lam < 0
    return np.sort(-1.0 / p.lam[neg])


def _interval_grid(a: float, b: float, cfg: RootSearchConfig) -> np.ndarray:
    """Points inside ``(a, b)`` clustered toward both ends (``b`` may be inf)."""
    k = cfg.grid_points
    if np.isfinite(b):
        off = np.logspace(np.log10(cfg.near_offset), np.log10(0.5), k // 2)
        pts = np.concatenate([a + (b - a) * off, b - (b - a) * off[::-1]])
    else:
        raise AssertionError("unbounded interval handled by caller")
    if a == 0.0:
        pts = np.concatenate([[0.0], pts])
    return np.unique(pts)


def _tail_grid(a: float, p: SecularProblem, cfg: RootSearchConfig) -> np.ndarray:
    nz = np.abs(p.lam[p.lam != 0])
    if a > 0:
        lo = a * (1.0 + cfg.near_offset)
        hi = a * 10.0**cfg.beyond_pole_decades
    else:
        base = 1.0 / nz.max() if nz.size else 1.0
        lo = base * cfg.near_offset
        hi = base * 10.0**cfg.beyond_pole_decades
    if nz.size:
        hi = max(hi, 10.0**cfg.beyond_pole_decades / nz.min())
    pts = np.geomspace(lo, hi, cfg.grid_points)
    if a > 0:
        # resolve the neighbourhood of the pole on a relative scale
        pts = np.concatenate([a * (1.0 + np.geomspace(cfg.near_offset, 1.0, cfg.grid_points // 2)), pts])
    else:
        pts = np.concatenate([[0.0], pts])
    return np.unique(pts)


def _polish(p: SecularProblem, mu: float, lo: float, hi: float) -> float:
    """A few safeguarded Newton steps; keeps the iterate inside ``[lo, hi]``."""
    best, fbest = mu, abs(float(p(mu)))
    x = mu
    for _ in range(3):
        d = p.derivative(x)
        if not np.isfinite(d) or d == 0.0:
            break
        x = x - float(p(x)) / d
        if not lo <= x <= hi:
            break
        fx = abs(float(p(x)))
        if fx < fbest:
            best, fbest = x, fx
    return best


def secular_positive_roots(p: SecularProblem, cfg: RootSearchConfig | None = None, trace: list | None = None) -> list[float]:
    """All sign-change roots of ``p`` on ``mu > 0``, interval by interval between poles.

    On ``(0, first pole)`` the function is monotone when there is a single
    negative eigenvalue and ``e = 0``; the grid there reduces to one bracket.
    Beyond the last pole a geometric grid is scanned.
    """
    cfg = cfg or RootSearchConfig()
    if not np.any(p.lam != 0):
        raise ParameterError("secular function needs at least one nonzero eigenvalue")
    poles = _poles(p)
    edges = [0.0, *poles.tolist()]
    roots: list[float] = []
    for i, a in enumerate(edges):
        b = edges[i + 1] if i + 1 < len(edges) else np.inf
        if b == a:
            continue
        pts = _interval_grid(a, b, cfg) if np.isfinite(b) else _tail_grid(a, p, cfg)
        vals = p(pts)
        ok = np.isfinite(vals)
        pts, vals = pts[ok], vals[ok]
        if trace is not None:
            trace.append({"interval": (a, float(b)), "n_points": int(pts.size),
                          "f_min": float(vals.min()) if vals.size else None,
                          "f_max": float(vals.max()) if vals.size else None})
        sgn = np.sign(vals)
        for j in np.flatnonzero(sgn[:-1] * sgn[1:] < 0):
            lo, hi = float(pts[j]), float(pts[j + 1])
            mu = brentq(p, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
            mu = _polish(p, mu, lo, hi)
            if mu <= 0:
                continue
            if poles.size and np.min(np.abs(mu - poles) / poles) < EPS_POLE:
                continue
            roots.append(mu)
        for j in np.flatnonzero(vals == 0):
            if pts[j] > 0:
                roots.append(float(pts[j]))
    return sorted(set(roots))


class PreparedQp1qc:
    """Factorization of ``(A0, A1)`` reused across many right-hand sides.

    ADMM keeps ``A0`` and ``A1`` fixed over a run and only changes
    ``b0`` (and, after linearization, ``b1`` and ``r1``), so the two
    eigendecompositions are done once here.
    """

    def __init__(self, A0, A1, root_cfg: RootSearchConfig | None = None):
        A0 = np.atleast_2d(np.asarray(A0, dtype=float))
        A1 = np.atleast_2d(np.asarray(A1, dtype=float))
        s, V = np.linalg.eigh(0.5 * (A0 + A0.T))
        if s[0] <= 0:
            raise ParameterError("A0 must be positive definite")
        A0_isqrt = (V / np.sqrt(s)) @ V.T
        K = A0_isqrt @ A1 @ A0_isqrt
        kappa, U = np.linalg.eigh(0.5 * (K + K.T))
        self.A0, self.A1 = A0, A1
        self.kappa = kappa
        self.T = A0_isqrt @ U  # w = T u
        self.root_cfg = root_cfg or RootSearchConfig()

    def secular_problem(self, b0, b1, r1) -> SecularProblem:
        b0 = np.asarray(b0, dtype=float)
        b1 = np.asarray(b1, dtype=float)
        if r1 == 0 and not np.any(b1):
            raise ParameterError("degenerate instance: r1 = 0 and b1 = 0")
        s = abs(r1) if r1 != 0 else 1.0
        return SecularProblem(
            lam=self.kappa / s,
            g=self.T.T @ b0,
            e=self.T.T @ b1 / s,
            sigma=float(np.sign(r1)),
        )

    def solve(self, b0, b1, r1) -> Qp1qcResult:
        p = self.secular_problem(b0, b1, r1)
        s = abs(r1) if r1 != 0 else 1.0
        diagnostics: dict = {}

        u0 = -p.g
        c0 = float(p(0.0))
        if c0 <= 0:
            return self._result(u0, 0.0, p, s, b0, "mu=0", [], diagnostics)

        g = p.g.copy()
        hard = (p.lam < 0) & (np.abs(g) < HARD_CASE_TOL) & (np.abs(p.e) < HARD_CASE_TOL)
        if np.any(hard):
            bump = 1e-8 * max(np.linalg.norm(g), 1.0)
            g[hard] = np.where(g[hard] >= 0, bump, -bump)
            diagnostics["hard_case_perturbation"] = bump
            log.debug("secular hard case: perturbed %d component(s) by %g", int(hard.sum()), bump)
            p = SecularProblem(lam=p.lam, g=g, e=p.e, sigma=p.sigma)

        trace: list = []
        roots = secular_positive_roots(p, self.root_cfg, trace)
        diagnostics["root_search"] = trace
        best = None
        tol = 1e-9 * p.scale
        for mu in roots:
            u = p.u(mu)
            cval = float(np.sum(p.lam * u * u + 2 * p.e * u) + p.sigma)
            if not np.all(np.isfinite(u)) or cval > 1e-7:
                continue
            obj = float(u @ u + 2 * p.g @ u)
            if best is None or obj < best[0] - 1e-9 * max(1.0, abs(best[0])):
                best = (obj, mu, u)
        if best is None:
            raise SolverError(
                "no KKT candidate satisfies the constraint",
                {"roots": roots, "f0": c0, "tol": tol, **diagnostics},
            )
        _, mu, u = best
        return self._result(u, mu, p, s, b0, "secular", roots, diagnostics)

    def _result(self, u, mu, p, s, b0, branch, roots, diagnostics) -> Qp1qcResult:
        w = self.T @ u
        objective = float(w @ self.A0 @ w + 2 * np.asarray(b0) @ w)
        constraint = float(np.sum(p.lam * u * u + 2 * p.e * u) + p.sigma) * s
        # the secular multiplier belongs to the constraint divided by |r1|
        return Qp1qcResult(w=w, mu=float(mu) / s, objective=objective, constraint=constraint,
                           branch=branch, roots=[r / s for r in roots], diagnostics=diagnostics)


def solve_qp1qc(inst: Qp1qcInstance, root_cfg: RootSearchConfig | None = None) -> Qp1qcResult:
    return PreparedQp1qc(inst.A0, inst.A1, root_cfg).solve(inst.b0, inst.b1, inst.r1)


def constraint_value(inst: Qp1qcInstance, w) -> float:
    w = np.asarray(w, dtype=float)
    return float(w @ inst.A1 @ w + 2 * inst.b1 @ w + inst.r1)


def objective_value(inst: Qp1qcInstance, w) -> float:
    w = np.asarray(w, dtype=float)
    return float(w @ inst.A0 @ w + 2 * inst.b0 @ w)


def stationarity_residual(inst: Qp1qcInstance, w, mu: float) -> float:
    w = np.asarray(w, dtype=float)
    return float(np.linalg.norm((inst.A0 + mu * inst.A1) @ w + inst.b0 + mu * inst.b1))
