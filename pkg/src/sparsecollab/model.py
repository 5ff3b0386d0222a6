"""Scenario construction and quadratic-form representation of the costs.

The collaboration matrix ``W`` (N x N) is handled as its row-wise vector
``w`` of length ``L = N**2``: entry ``l`` holds ``W[m_l, n_l]`` with
``m_l = l // N`` and ``n_l = l % N`` (zero-based).  All Kronecker
constructions below rely on this ordering.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError, ParameterError

GRID_SIZE = 10.0

DEFAULT_PARAMS = {
    "h0": 1.0,
    "g0": 1.0,
    "alpha_h": 0.7,
    "alpha_g": 0.7,
    "zeta2": 1.0,
    "rho_corr": 0.5,
    "xi2": 1.0,
    "eta2": 0.1,
    "alpha_c": 0.01,
    "alpha_s": 0.01,
}


@dataclass(frozen=True)
class Scenario:
    """Sensor/FC geometry plus the second-order statistics of the network."""

    N: int
    sensor_pos: np.ndarray
    fc_pos: np.ndarray
    h0: float = 1.0
    g0: float = 1.0
    alpha_h: float = 0.7
    alpha_g: float = 0.7
    zeta2: float = 1.0
    rho_corr: float = 0.5
    xi2: float = 1.0
    eta2: float = 0.1
    alpha_c: float = 0.01
    alpha_s: float = 0.01
    seed: int | None = None

    def __post_init__(self):
        _validate(self)

    # -- derived statistics (homogeneous, equicorrelated network) --
    @property
    def h(self) -> np.ndarray:
        return self.h0 * np.sqrt(self.alpha_h) * np.ones(self.N)

    @property
    def g(self) -> np.ndarray:
        return self.g0 * np.sqrt(self.alpha_g) * np.ones(self.N)

    @property
    def Sigma_h(self) -> np.ndarray:
        return self.h0**2 * (1.0 - self.alpha_h) * np.eye(self.N)

    @property
    def Sigma_g(self) -> np.ndarray:
        return self.g0**2 * (1.0 - self.alpha_g) * np.eye(self.N)

    @property
    def Sigma_eps(self) -> np.ndarray:
        N = self.N
        return self.zeta2 * ((1.0 - self.rho_corr) * np.eye(N) + self.rho_corr * np.ones((N, N)))

    @property
    def Sigma_x(self) -> np.ndarray:
        h = self.h
        return self.Sigma_eps + self.eta2 * (np.outer(h, h) + self.Sigma_h)

    @property
    def C(self) -> np.ndarray:
        """Collaboration cost matrix, ``alpha_c * ||s_m - s_n||``."""
        diff = self.sensor_pos[:, None, :] - self.sensor_pos[None, :, :]
        return self.alpha_c * np.linalg.norm(diff, axis=-1)

    @property
    def d(self) -> np.ndarray:
        """Selection cost vector, ``alpha_s * ||s_n - s_fc||``."""
        return self.alpha_s * np.linalg.norm(self.sensor_pos - self.fc_pos, axis=1)

    def replace(self, **changes) -> "Scenario":
        fields = self.to_dict()
        fields.update(changes)
        return Scenario.from_dict(fields)

    def to_dict(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k not in ("sensor_pos", "fc_pos")}
        out["sensor_pos"] = np.asarray(self.sensor_pos).tolist()
        out["fc_pos"] = np.asarray(self.fc_pos).tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        data = dict(data)
        data["sensor_pos"] = np.asarray(data["sensor_pos"], dtype=float).reshape(-1, 2)
        data["fc_pos"] = np.asarray(data["fc_pos"], dtype=float).reshape(2)
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        return cls.from_dict(json.loads(text))


def _validate(s: Scenario) -> None:
    if not isinstance(s.N, (int, np.integer)) or s.N < 1:
        raise ParameterError(f"sensor count must be a positive integer, got {s.N!r}")
    pos = np.asarray(s.sensor_pos, dtype=float)
    if pos.shape != (s.N, 2):
        raise ParameterError(f"sensor_pos must have shape ({s.N}, 2), got {pos.shape}")
    if np.asarray(s.fc_pos).shape != (2,):
        raise ParameterError("fc_pos must be a 2-vector")
    lo = -1.0 / (s.N - 1) if s.N > 1 else -np.inf
    if not lo < s.rho_corr < 1.0:
        raise ParameterError(f"rho_corr must lie in ({lo}, 1), got {s.rho_corr}")
    for name in ("alpha_h", "alpha_g"):
        if not 0.0 <= getattr(s, name) <= 1.0:
            raise ParameterError(f"{name} must lie in [0, 1]")
    for name in ("zeta2", "xi2", "eta2"):
        if not getattr(s, name) > 0:
            raise ParameterError(f"{name} must be positive")
    for name in ("alpha_c", "alpha_s"):
        if getattr(s, name) < 0:
            raise ParameterError(f"{name} must be nonnegative")
    try:
        np.linalg.cholesky(s.Sigma_eps)
    except np.linalg.LinAlgError as exc:
        raise ParameterError("measurement noise covariance is not positive definite") from exc


def build_scenario(n: int, seed: int | None = 0, *, sensor_pos=None, fc_pos=None, **params) -> Scenario:
    """Random deployment of ``n`` sensors and the FC on the 10 x 10 square.

    Positions are i.i.d. uniform (continuous) unless given explicitly.
    Remaining keyword arguments override :data:`DEFAULT_PARAMS`.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ParameterError(f"sensor count must be >= 1, got {n!r}")
    unknown = set(params) - set(DEFAULT_PARAMS)
    if unknown:
        raise ParameterError(f"unknown scenario parameters: {sorted(unknown)}")
    rng = np.random.default_rng(seed)
    pos = rng.uniform(0.0, GRID_SIZE, size=(n, 2))
    fc = rng.uniform(0.0, GRID_SIZE, size=2)
    if sensor_pos is not None:
        pos = np.asarray(sensor_pos, dtype=float).reshape(n, 2)
    if fc_pos is not None:
        fc = np.asarray(fc_pos, dtype=float).reshape(2)
    merged = {**DEFAULT_PARAMS, **params}
    return Scenario(N=int(n), sensor_pos=pos, fc_pos=fc, seed=seed, **merged)


# ---------------------------------------------------------------------------
# index bookkeeping for the row-wise vectorization
# ---------------------------------------------------------------------------


def row_index(N: int) -> np.ndarray:
    """``m_l`` for every entry of ``w`` (zero-based row of W)."""
    return np.repeat(np.arange(N), N)


def col_index(N: int) -> np.ndarray:
    """``n_l`` for every entry of ``w`` (zero-based column of W)."""
    return np.tile(np.arange(N), N)


def diag_indices(N: int) -> np.ndarray:
    return np.arange(N) * (N + 1)


def groups(N: int) -> list[np.ndarray]:
    """Index sets G_n: the entries of ``w`` belonging to row n of W."""
    return [np.arange(n * N, (n + 1) * N) for n in range(N)]


def vec(W: np.ndarray) -> np.ndarray:
    return np.asarray(W, dtype=float).reshape(-1)


def unvec(w: np.ndarray, N: int) -> np.ndarray:
    return np.asarray(w, dtype=float).reshape(N, N)


# ---------------------------------------------------------------------------
# quadratic forms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadForms:
    Omega_T: np.ndarray
    Omega_JN: np.ndarray
    Omega_JD: np.ndarray
    c: np.ndarray
    d: np.ndarray
    xi2: float
    eta2: float
    N: int
    L: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "L", self.N * self.N)

    @property
    def total_link_cost(self) -> float:
        """``1^T c``, the collaboration cost of a fully connected network."""
        return float(self.c.sum())

    def restrict(self, idx) -> "QuadForms":
        """Forms of the sub-problem on the entries ``idx`` (N is kept)."""
        idx = np.asarray(idx, dtype=int)
        sub = np.ix_(idx, idx)
        out = object.__new__(QuadForms)
        for name, val in (
            ("Omega_T", self.Omega_T[sub]),
            ("Omega_JN", self.Omega_JN[sub]),
            ("Omega_JD", self.Omega_JD[sub]),
            ("c", self.c[idx]),
            ("d", self.d),
            ("xi2", self.xi2),
            ("eta2", self.eta2),
            ("N", self.N),
            ("L", len(idx)),
        ):
            object.__setattr__(out, name, val)
        return out


def gain_matrix(g: np.ndarray) -> np.ndarray:
    """L x N matrix G with ``G[l, n_l] = g[m_l]``, so that ``G.T @ w = W.T @ g``."""
    N = len(g)
    G = np.zeros((N * N, N))
    G[np.arange(N * N), col_index(N)] = g[row_index(N)]
    return G


def build_forms(s: Scenario) -> QuadForms:
    N = s.N
    h, g = s.h, s.g
    Sig_eps, Sig_h, Sig_g = s.Sigma_eps, s.Sigma_h, s.Sigma_g
    G = gain_matrix(g)
    H = np.kron(np.eye(N), h[:, None])
    Gh = G @ h

    Omega_T = np.kron(np.eye(N), s.Sigma_x)
    Omega_JN = np.outer(Gh, Gh)
    Omega_JD = (
        G @ (Sig_eps + s.eta2 * Sig_h) @ G.T
        + s.eta2 * H @ Sig_g @ H.T
        + s.eta2 * np.kron(Sig_g, Sig_h)
        + np.kron(Sig_g, Sig_eps)
    )
    sym = lambda A: 0.5 * (A + A.T)  # noqa: E731
    return QuadForms(
        Omega_T=sym(Omega_T),
        Omega_JN=sym(Omega_JN),
        Omega_JD=sym(Omega_JD),
        c=vec(s.C),
        d=s.d.copy(),
        xi2=float(s.xi2),
        eta2=float(s.eta2),
        N=N,
    )


# ---------------------------------------------------------------------------
# scalar metrics
# ---------------------------------------------------------------------------


def _check_len(forms: QuadForms, w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (forms.L,):
        raise ParameterError(f"w must have length {forms.L}, got shape {w.shape}")
    return w


def transmission_cost(forms: QuadForms, w) -> float:
    w = _check_len(forms, w)
    return float(w @ forms.Omega_T @ w)


def fisher_info(forms: QuadForms, w) -> float:
    w = _check_len(forms, w)
    num = float(w @ forms.Omega_JN @ w)
    den = float(w @ forms.Omega_JD @ w) + forms.xi2
    return num / den


def transmission_cost_direct(s: Scenario, W) -> float:
    """``tr(W Sigma_x W^T)`` evaluated on the matrix form."""
    W = np.asarray(W, dtype=float)
    return float(np.trace(W @ s.Sigma_x @ W.T))


def fisher_info_direct(s: Scenario, W) -> float:
    """Equivalent Fisher information evaluated on the matrix form of W."""
    W = np.asarray(W, dtype=float)
    g, h = s.g, s.h
    Sig_gt = np.outer(g, g) + s.Sigma_g
    gWh = float(g @ W @ h)
    den = np.trace(Sig_gt @ W @ s.Sigma_x @ W.T) - s.eta2 * gWh**2 + s.xi2
    return gWh**2 / den


def distortion(J: float, eta2: float) -> float:
    if J < 0:
        raise DomainError(f"Fisher information must be nonnegative, got {J}")
    return eta2 / (1.0 + eta2 * J)


def normalized_distortion(D: float, D0: float, eta2: float) -> float:
    if not D0 < D <= eta2 * (1 + 1e-12):
        raise DomainError(f"distortion {D} outside ({D0}, {eta2}]")
    return min((D - D0) / (eta2 - D0), 1.0)


def info_from_dnorm(dnorm: float, D0: float, eta2: float) -> float:
    """Fisher-information threshold that yields normalized distortion ``dnorm``."""
    if not 0.0 < dnorm <= 1.0:
        raise DomainError(f"normalized distortion must lie in (0, 1], got {dnorm}")
    D = D0 + dnorm * (eta2 - D0)
    return max(1.0 / D - 1.0 / eta2, 0.0)


def _threshold(w: np.ndarray, zero_tol: float) -> float:
    scale = max(1.0, float(np.max(np.abs(w)))) if w.size else 1.0
    return zero_tol * scale


def nonzero_mask(w, zero_tol: float = 1e-3) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    return np.abs(w) > _threshold(w, zero_tol)


def selected_rows(w, N: int, zero_tol: float = 1e-3) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    norms = np.linalg.norm(unvec(w, N), axis=1)
    return np.flatnonzero(norms > _threshold(w, zero_tol))


def collaboration_cost(forms: QuadForms, w, zero_tol: float = 1e-3) -> float:
    w = _check_len(forms, w)
    return float(forms.c[nonzero_mask(w, zero_tol)].sum())


def selection_cost(forms: QuadForms, w, zero_tol: float = 1e-3) -> float:
    w = _check_len(forms, w)
    return float(forms.d[selected_rows(w, forms.N, zero_tol)].sum())


def link_percentage(w, N: int, zero_tol: float = 1e-3) -> float:
    """Share of the off-diagonal entries of W that are active, in percent."""
    L = N * N
    if L == N:
        raise DomainError("link percentage is undefined for a single sensor")
    card = int(nonzero_mask(w, zero_tol).sum())
    return (card - N) / (L - N) * 100.0


@dataclass
class Metrics:
    T: float
    Q: float
    S: float
    P: float
    J: float
    D: float
    D_norm: float
    card: int
    links: int
    per_w: float | None
    selected: list[int]


def compute_metrics(forms: QuadForms, w, J0: float, *, zero_tol: float = 1e-3, joint: bool = False) -> Metrics:
    """Every reported scalar, recomputed from ``w``.

    For the joint problem ``P`` includes the selection cost ``S`` and the
    link percentage is left undefined.
    """
    w = _check_len(forms, w)
    N = forms.N
    T = transmission_cost(forms, w)
    Q = collaboration_cost(forms, w, zero_tol)
    S = selection_cost(forms, w, zero_tol)
    J = fisher_info(forms, w)
    D = distortion(J, forms.eta2)
    D0 = distortion(J0, forms.eta2)
    D_norm = (D - D0) / (forms.eta2 - D0) if forms.eta2 > D0 else 1.0
    mask = nonzero_mask(w, zero_tol)
    card = int(mask.sum())
    links = int(mask.sum() - mask[diag_indices(N)].sum())
    per_w = None
    if not joint and N > 1:
        per_w = link_percentage(w, N, zero_tol)
    return Metrics(
        T=T,
        Q=Q,
        S=S,
        P=T + Q + (S if joint else 0.0),
        J=J,
        D=D,
        D_norm=D_norm,
        card=card,
        links=links,
        per_w=per_w,
        selected=[int(i) for i in selected_rows(w, N, zero_tol)],
    )
