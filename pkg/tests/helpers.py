"""Shared test helpers."""

import numpy as np

from sparsecollab import build_scenario


def random_scenario(rng, n_max=6, **params):
    n = int(rng.integers(1, n_max + 1))
    return build_scenario(n, int(rng.integers(0, 2**31)), **params)


def _ray_min(a0, b0, a1, b1, r1):
    """min a0 t^2 + 2 b0 t over t >= 0 with a1 t^2 + 2 b1 t + r1 <= 0."""
    # feasible t form at most two intervals bounded by the roots of the constraint
    if abs(a1) < 1e-15:
        if abs(b1) < 1e-15:
            ivals = [(0.0, np.inf)] if r1 <= 0 else []
        else:
            t0 = -r1 / (2 * b1)
            ivals = [(max(t0, 0.0), np.inf)] if b1 < 0 else ([(0.0, t0)] if t0 >= 0 else [])
    else:
        disc = b1 * b1 - a1 * r1
        if disc < 0:
            ivals = [] if a1 > 0 else [(0.0, np.inf)]
        else:
            s = np.sqrt(disc)
            lo, hi = sorted(((-b1 - s) / a1, (-b1 + s) / a1))
            ivals = [(lo, hi)] if a1 > 0 else [(-np.inf, lo), (hi, np.inf)]
        ivals = [(max(lo, 0.0), hi) for lo, hi in ivals if hi >= 0]
    best = np.inf, None
    t_star = -b0 / a0
    for lo, hi in ivals:
        t = min(max(t_star, lo), hi)
        if np.isfinite(t):
            val = a0 * t * t + 2 * b0 * t
            if val < best[0]:
                best = val, t
    return best


def brute_force_qp1qc(A0, b0, A1, b1, r1, n_angles=2000, n_refine=2000):
    """Global minimum of a 2-variable QP1QC by a polar sweep plus local angle refinement."""

    def sweep(thetas):
        out = np.inf, None
        for th in thetas:
            d = np.array([np.cos(th), np.sin(th)])
            val, t = _ray_min(d @ A0 @ d, b0 @ d, d @ A1 @ d, b1 @ d, r1)
            if val < out[0]:
                out = val, th
        return out

    val, th = sweep(np.linspace(0, 2 * np.pi, n_angles, endpoint=False))
    # the origin is also a candidate
    if r1 <= 0:
        val = min(val, 0.0)
    if th is not None:
        step = 2 * np.pi / n_angles
        val = min(val, sweep(np.linspace(th - step, th + step, n_refine))[0])
    return val


def random_qp1qc_l2(rng, kind):
    """Random feasible 2-variable instance: ``indefinite`` (one negative eigenvalue) or ``convex``."""
    X = rng.normal(size=(2, 2))
    A0 = X @ X.T + 0.2 * np.eye(2)
    b0 = rng.normal(size=2)
    Q, _ = np.linalg.qr(rng.normal(size=(2, 2)))
    if kind == "indefinite":
        lam = np.array([-rng.uniform(0.2, 3.0), rng.uniform(0.2, 3.0)])
        A1 = Q @ np.diag(lam) @ Q.T
        b1 = np.zeros(2)
        r1 = rng.uniform(0.1, 3.0)
    else:
        lam = rng.uniform(0.2, 3.0, size=2)
        A1 = Q @ np.diag(lam) @ Q.T
        b1 = rng.normal(size=2)
        # keep the feasible ellipse nonempty: r1 < b1^T A1^{-1} b1
        r1 = rng.uniform(0.1, 0.9) * float(b1 @ np.linalg.solve(A1, b1))
    return A0, b0, A1, b1, r1


def soft_objective(v, b, theta):
    """``theta |v| + 1/2 (v - b)^2`` (the unit-weight scalar prox objective)."""
    return theta * np.abs(v) + 0.5 * (v - b) ** 2


def block_objective(v, b, f, d_tilde, rho):
    """``||diag(f) v||_1 + d_tilde ||v||_2 + rho/2 ||v - b||^2`` over the last axis."""
    return (np.sum(f * np.abs(v), axis=-1) + d_tilde * np.linalg.norm(v, axis=-1)
            + 0.5 * rho * np.sum((v - b) ** 2, axis=-1))


def grid_min_soft(b, theta, n=20001):
    span = abs(b) + theta + 1.0
    grid = np.linspace(-span, span, n)
    vals = soft_objective(grid, b, theta)
    i = int(np.argmin(vals))
    # one refinement pass around the coarse minimizer
    fine = np.linspace(grid[max(i - 1, 0)], grid[min(i + 1, n - 1)], n)
    return min(vals[i], soft_objective(fine, b, theta).min(), soft_objective(0.0, b, theta))


def grid_min_block(b, f, d_tilde, rho, n=801):
    """Dense 2-D grid minimum, refined twice around the best point; the origin is included."""
    span = np.abs(b).max() + 1.0
    center, half = np.zeros(2), span
    best = float(block_objective(np.zeros(2), b, f, d_tilde, rho))
    for _ in range(3):
        xs = np.linspace(center[0] - half, center[0] + half, n)
        ys = np.linspace(center[1] - half, center[1] + half, n)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        V = block_objective(np.stack([X, Y], axis=-1), b, f, d_tilde, rho)
        k = np.unravel_index(np.argmin(V), V.shape)
        if V[k] < best:
            best = float(V[k])
        center = np.array([xs[k[0]], ys[k[1]]])
        half = 4 * (xs[1] - xs[0])
    return best
