"""Parameter sweeps over one axis, one solve per grid point.

Rows are independent, so they can run in a process pool; results are
collected in grid order by the caller's process.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import CollabError, DomainError, InfeasibleError
from .model import Scenario, build_forms, info_from_dnorm
from .spectral import min_distortion_D0
from .strategies import SolverConfig, solve_energy_constrained, solve_info_constrained, solve_joint

log = logging.getLogger(__name__)

COLUMNS = ("axis_value", "P", "T", "Q", "S", "J", "D_norm", "card", "per_w",
           "selected", "iterations", "status")

# axis -> (varied quantity, problem kinds it makes sense with)
AXES = {
    "dnorm": ("target", ("info", "joint")),
    "jcheck": ("target", ("info", "joint")),
    "budget": ("target", ("energy",)),
    "alpha_c": ("param", ("info", "energy", "joint")),
    "alpha_s": ("param", ("joint",)),
    "noise_ratio": ("param", ("info", "energy", "joint")),
}


@dataclass
class SweepSpec:
    """One sweep: ``axis`` takes each value of ``grid``; the other target is fixed."""

    kind: str
    axis: str
    grid: list
    dnorm: float | None = None
    jcheck: float | None = None
    budget: float | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"unknown sweep axis {self.axis!r}; choose from {sorted(AXES)}")
        if self.kind not in AXES[self.axis][1]:
            raise ValueError(f"axis {self.axis!r} does not apply to problem kind {self.kind!r}")
        if len(self.grid) == 0:
            raise ValueError("sweep grid is empty")
        g = np.asarray(self.grid, dtype=float)
        if not np.all(np.isfinite(g)):
            raise ValueError("sweep grid must be finite")
        d = np.diff(g)
        if g.size > 1 and not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("sweep grid must be strictly monotone")
        if AXES[self.axis][0] == "param":
            fixed = [x for x in (self.dnorm, self.jcheck, self.budget) if x is not None]
            if len(fixed) != 1:
                raise ValueError("a parameter sweep needs exactly one fixed target (dnorm, jcheck or budget)")
            if self.kind == "energy" and self.budget is None:
                raise ValueError("energy sweeps need a fixed budget")
            if self.kind != "energy" and self.budget is not None:
                raise ValueError(f"{self.kind} sweeps take dnorm or jcheck, not a budget")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["grid"] = [float(x) for x in self.grid]
        return out


def _row_scenario(s: Scenario, axis: str, value: float) -> Scenario:
    if axis == "alpha_c":
        return s.replace(alpha_c=value)
    if axis == "alpha_s":
        return s.replace(alpha_s=value)
    if axis == "noise_ratio":
        return s.replace(zeta2=value * s.xi2)
    return s


def _target(spec: SweepSpec, value: float) -> tuple[str, float]:
    if spec.axis in ("dnorm", "jcheck", "budget"):
        return spec.axis, value
    for name in ("dnorm", "jcheck", "budget"):
        if getattr(spec, name) is not None:
            return name, getattr(spec, name)
    raise AssertionError("validated in SweepSpec")


def run_row(scenario: Scenario, spec: SweepSpec, value: float) -> dict:
    """Solve one grid point; failures become a status instead of an exception."""
    row = dict.fromkeys(COLUMNS)
    row["axis_value"] = float(value)
    try:
        forms = build_forms(_row_scenario(scenario, spec.axis, float(value)))
        name, target = _target(spec, float(value))
        if spec.kind == "energy":
            rep = solve_energy_constrained(forms, target, spec.solver)
        else:
            J = info_from_dnorm(target, min_distortion_D0(forms), forms.eta2) if name == "dnorm" else target
            solver = solve_info_constrained if spec.kind == "info" else solve_joint
            rep = solver(forms, J, spec.solver)
    except (InfeasibleError, DomainError) as exc:
        row["status"] = "infeasible"
        log.info("row %s=%g infeasible: %s", spec.axis, value, exc)
        return row
    except (CollabError, ValueError) as exc:
        row["status"] = f"error: {exc}"
        log.warning("row %s=%g failed: %s", spec.axis, value, exc)
        return row
    m = rep.metrics
    row.update(P=m.P, T=m.T, Q=m.Q, S=m.S if spec.kind == "joint" else None, J=m.J, D_norm=m.D_norm, card=m.links, per_w=m.per_w,
               selected=len(m.selected), iterations=sum(v for v in rep.iterations.values() if isinstance(v, int)),
               status=rep.status)
    row["w"] = [float(x) for x in rep.w_final]  # kept out of the CSV, echoed in the sidecar
    return row


def _row_job(args):
    return run_row(*args)


def run_sweep(scenario: Scenario, spec: SweepSpec, jobs: int = 1) -> list[dict]:
    tasks = [(scenario, spec, float(v)) for v in spec.grid]
    if jobs <= 1 or len(tasks) == 1:
        return [run_row(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(_row_job, tasks))


def succeeded(row: dict) -> bool:
    return row["status"] in ("converged", "nonconverged")
