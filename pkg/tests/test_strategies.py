import json

import numpy as np
import pytest

from sparsecollab import (
    InfeasibleError,
    ParameterError,
    SolverConfig,
    build_forms,
    build_scenario,
    info_bound_J0,
    solve_energy_constrained,
    solve_info_constrained,
    solve_joint,
)
from sparsecollab.admm import LinearizedConstraint
from sparsecollab.model import compute_metrics, diag_indices, fisher_info, info_from_dnorm
from sparsecollab.oracle import exhaustive_info
from sparsecollab.spectral import fully_connected_info, min_distortion_D0
from sparsecollab.strategies import bisection_bound, extract_topology, joint_objective, polish


def test_info_scalar(f1):
    rep = solve_info_constrained(f1, 0.2)
    assert rep.metrics.P == pytest.approx(0.78628, abs=1e-4)
    assert rep.support == [0] and rep.metrics.Q == 0
    assert rep.status == "converged"


def test_info_near_oracle():
    f = build_forms(build_scenario(2, 6))
    J = 0.5 * info_bound_J0(f)
    rep = solve_info_constrained(f, J)
    ref = exhaustive_info(f, J)
    assert rep.metrics.P <= 1.05 * ref.value
    assert rep.metrics.P >= ref.value - 1e-9


def test_info_free_links():
    f = build_forms(build_scenario(3, 2, alpha_c=0.0))
    J = 0.6 * info_bound_J0(f)
    P, _ = fully_connected_info(f, J)
    assert solve_info_constrained(f, J).metrics.P == pytest.approx(P, rel=1e-3)


def test_info_edge_thresholds(f1):
    rep = solve_info_constrained(f1, 0.0)
    assert np.all(rep.w_final == 0)
    with pytest.raises(InfeasibleError):
        solve_info_constrained(f1, info_bound_J0(f1))
    with pytest.raises(InfeasibleError):
        solve_info_constrained(f1, -0.1)


def test_info_monotone_in_threshold():
    f = build_forms(build_scenario(4, 11))
    J0 = info_bound_J0(f)
    Ps = [solve_info_constrained(f, x * J0).metrics.P for x in np.linspace(0.9, 0.2, 8)]
    assert np.all(np.diff(Ps) <= 1e-6)


def test_energy_scalar(f1):
    rep = solve_energy_constrained(f1, 1.1)
    assert rep.metrics.J == pytest.approx(0.23891, abs=1e-4)
    assert abs(rep.w_final[0]) == pytest.approx(1.0, abs=1e-6)
    cfg = SolverConfig()
    assert solve_energy_constrained(f1, 0.78628, cfg).metrics.J == pytest.approx(0.2, abs=cfg.eps_bi)


def test_energy_budget_checks(f1):
    with pytest.raises(ParameterError):
        solve_energy_constrained(f1, 0.0)


def test_energy_monotone_in_budget():
    f = build_forms(build_scenario(3, 8))
    Js = [solve_energy_constrained(f, P).metrics.J for P in (0.3, 0.6, 1.2, 2.4, 4.8)]
    assert np.all(np.diff(Js) >= -1e-9)


def test_energy_respects_budget():
    f = build_forms(build_scenario(3, 9))
    for P_hat in (0.5, 2.0):
        rep = solve_energy_constrained(f, P_hat)
        assert rep.metrics.P <= P_hat * (1 + 1e-9)


def test_bisection_bound():
    cfg = SolverConfig()
    for seed in range(4):
        f = build_forms(build_scenario(3, seed))
        rep = solve_energy_constrained(f, 1.0, cfg)
        assert rep.iterations["bisection"] <= bisection_bound(info_bound_J0(f), cfg.eps_bi)


def test_joint_scalar():
    f = build_forms(build_scenario(1, 0, sensor_pos=[[0, 0]], fc_pos=[3, 4]))
    assert f.d[0] == pytest.approx(0.05)
    rep = solve_joint(f, 0.2)
    assert rep.metrics.P == pytest.approx(0.78628 + 0.05, abs=1e-4)
    assert rep.selected == [0]


def test_joint_without_selection_cost():
    f = build_forms(build_scenario(3, 5, alpha_s=0.0))
    J = info_from_dnorm(0.3, min_distortion_D0(f), f.eta2)
    a = solve_joint(f, J).metrics.P
    b = solve_info_constrained(f, J).metrics.P
    assert a == pytest.approx(b, rel=1e-3)


def test_joint_zero_threshold(f1):
    rep = solve_joint(f1, 0.0)
    assert rep.selected == [] and rep.metrics.S == 0


def test_joint_descent_and_feasibility():
    for seed in range(4):
        f = build_forms(build_scenario(3, seed))
        J = info_from_dnorm(0.3, min_distortion_D0(f), f.eta2)
        seen = []

        def obs(t, s, w, lin):
            seen.append((t, lin.value(w), fisher_info(f, w)))

        rep = solve_joint(f, J, observer=obs)
        assert seen
        for t, lin_val, info in seen:
            if lin_val <= 0:
                assert info >= J * (1 - 1e-9)
        by_round = {}
        for h in rep.history:
            if "phi" in h and "t" in h and "rejected" not in h:
                by_round.setdefault(h["t"], []).append(h["phi"])
        for phis in by_round.values():
            assert np.all(np.diff(phis) <= 1e-8)


def test_extract_topology():
    assert extract_topology(np.zeros(4), N=2, include_diagonal=False) == ([], [])
    w = np.full(4, 1e-9)
    w[1] = 1.0
    assert extract_topology(w, 1e-3, N=2, include_diagonal=False) == ([1], [0])
    assert extract_topology(np.ones(4), N=2)[0] == [0, 1, 2, 3]
    assert extract_topology(w, 1e-3, N=2)[0] == [0, 1, 3]


def test_polish(f1):
    f = build_forms(build_scenario(2, 0))
    J = 0.5 * info_bound_J0(f)
    _, w_full = fully_connected_info(f, J)
    assert polish(f, range(4), J_check=J) == pytest.approx(w_full)
    assert abs(polish(f1, [0], J_check=0.2)[0]) == pytest.approx(0.84546, abs=1e-5)
    J_hi = 0.999 * info_bound_J0(f)
    assert polish(f, diag_indices(2), J_check=J_hi) is None
    with pytest.raises(ValueError):
        polish(f, [0], J_check=1.0, P_hat=1.0)


def test_report_self_consistent():
    f = build_forms(build_scenario(3, 1))
    J0 = info_bound_J0(f)
    for rep, joint in ((solve_info_constrained(f, 0.5 * J0), False), (solve_joint(f, 0.5 * J0), True)):
        again = compute_metrics(f, rep.w_final, J0, joint=joint)
        assert again == rep.metrics
        d = json.loads(rep.to_json())
        assert d["version"] == 1 and d["kind"] == rep.kind
        assert np.array_equal(np.array(d["w_final"]), rep.w_final)


def test_config_validation():
    with pytest.raises(ParameterError):
        SolverConfig(rho=0)
    with pytest.raises(ParameterError):
        SolverConfig(eps_rw=-1e-3)


def test_joint_objective_matches_definition():
    f = build_forms(build_scenario(2, 1))
    w = np.array([1.0, -0.5, 0.0, 2.0])
    tau, delta = np.full(4, 2.0), np.array([1.0, 3.0])
    expect = w @ f.Omega_T @ w + np.sum(tau * f.c * np.abs(w)) \
        + delta[0] * f.d[0] * np.linalg.norm(w[:2]) + delta[1] * f.d[1] * np.linalg.norm(w[2:])
    assert joint_objective(f, w, tau, delta) == pytest.approx(expect)


def test_linearization_tight_at_beta():
    f = build_forms(build_scenario(3, 2))
    J = 0.5 * info_bound_J0(f)
    _, beta = fully_connected_info(f, J)
    lin = LinearizedConstraint.around(f, J, beta)
    # at beta the restriction is exact: value = J xi2 + J w^T Omega_JD w - w^T Omega_JN w
    assert lin.value(beta) == pytest.approx(0.0, abs=1e-9)
