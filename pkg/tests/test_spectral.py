import numpy as np
import pytest

from sparsecollab import InfeasibleError, ParameterError, build_forms, build_scenario
from sparsecollab.model import diag_indices, fisher_info, transmission_cost
from sparsecollab.spectral import (
    fixed_topology_energy,
    fixed_topology_info,
    fully_connected_energy,
    fully_connected_info,
    gen_eig_max,
    gen_eig_min_pos,
    info_bound_J0,
    min_distortion_D0,
    restricted_J0,
)

from helpers import random_scenario


def _residual_ok(A, B, r):
    A, B = np.atleast_2d(A), np.atleast_2d(B)
    res = np.linalg.norm(A @ r.v - r.lam * B @ r.v)
    return res <= 1e-8 * (np.linalg.norm(A) + abs(r.lam) * np.linalg.norm(B)) * np.linalg.norm(r.v)


def test_min_pos_examples():
    assert gen_eig_min_pos(np.eye(2), np.eye(2)).lam == pytest.approx(1.0)
    r = gen_eig_min_pos(np.diag([2.0, 3.0]), np.diag([1.0, -1.0]))
    assert r.lam == pytest.approx(2.0)
    assert gen_eig_min_pos([[1.1]], [[1.399]]).lam == pytest.approx(0.78628, abs=1e-5)
    assert gen_eig_min_pos(np.eye(2), -np.eye(2)) is None
    with pytest.raises(ParameterError):
        gen_eig_min_pos(np.diag([1.0, -1.0]), np.eye(2))


def test_max_examples():
    assert gen_eig_max(np.eye(3), np.eye(3)).lam == pytest.approx(1.0)
    assert gen_eig_max([[0.49]], [[1.051]]).lam == pytest.approx(0.46622, abs=1e-5)
    assert gen_eig_max(np.zeros((2, 2)), np.eye(2)).lam == 0.0
    with pytest.raises(ParameterError):
        gen_eig_max(np.eye(2), np.zeros((2, 2)))


def test_eig_residuals_and_sign(rng):
    for _ in range(50):
        n = int(rng.integers(1, 8))
        X = rng.normal(size=(n, n))
        A = X @ X.T + n * np.eye(n)
        B = rng.normal(size=(n, n))
        B = B + B.T
        r = gen_eig_min_pos(A, B)
        if r is not None:
            assert r.lam > 0 and _residual_ok(A, B, r)
            assert r.v[np.flatnonzero(np.abs(r.v) > 1e-12)[0]] > 0
        r = gen_eig_max(B, A)
        assert _residual_ok(B, A, r)


def test_s1_bounds(f1):
    assert info_bound_J0(f1) == pytest.approx(0.46622, abs=1e-5)
    assert min_distortion_D0(f1) == pytest.approx(0.095545, abs=1e-6)


def test_no_signal_bound():
    f = build_forms(build_scenario(2, 0, h0=0.0))
    assert info_bound_J0(f) == 0.0
    assert min_distortion_D0(f) == pytest.approx(f.eta2)


def test_fully_connected_s1(f1):
    P, w = fully_connected_info(f1, 0.2)
    assert P == pytest.approx(0.78628, abs=1e-5)
    assert abs(w[0]) == pytest.approx(0.84546, abs=1e-5)
    P_small, _ = fully_connected_info(f1, 1e-9)
    assert P_small < 1e-8
    with pytest.raises(InfeasibleError):
        fully_connected_info(f1, 0.5)
    J, w = fully_connected_energy(f1, 1.1)
    assert J == pytest.approx(0.23891, abs=1e-5)
    assert abs(w[0]) == pytest.approx(1.0)
    assert fully_connected_energy(f1, 0.78628)[0] == pytest.approx(0.2, abs=1e-5)
    assert fully_connected_energy(f1, 1e9)[0] == pytest.approx(info_bound_J0(f1), rel=1e-6)
    with pytest.raises(InfeasibleError):
        fully_connected_energy(f1, 0.0)


def test_energy_budget_below_link_cost():
    f = build_forms(build_scenario(3, 1, alpha_c=1.0))
    with pytest.raises(InfeasibleError):
        fully_connected_energy(f, 0.5 * f.total_link_cost)


def test_round_trip(rng):
    for _ in range(50):
        f = build_forms(random_scenario(rng))
        P_hat = f.total_link_cost + rng.uniform(0.1, 10.0)
        J, w = fully_connected_energy(f, P_hat)
        assert transmission_cost(f, w) == pytest.approx(P_hat - f.total_link_cost, rel=1e-9)
        P, w2 = fully_connected_info(f, J)
        assert abs(P - P_hat) <= 1e-6 * P_hat
        assert fisher_info(f, w2) == pytest.approx(J, rel=1e-8)


def test_single_negative_eigenvalue(rng):
    for _ in range(50):
        f = build_forms(random_scenario(rng))
        J = rng.uniform(0.01, 0.99) * info_bound_J0(f)
        assert np.linalg.eigvalsh(J * f.Omega_JD - f.Omega_JN)[0] < 0


def test_closed_form_local_optimality(rng):
    f = build_forms(build_scenario(2, 4))
    J = 0.5 * info_bound_J0(f)
    _, w = fully_connected_info(f, J)
    T0 = transmission_cost(f, w)
    for _ in range(10_000):
        u = w + 0.3 * rng.normal(size=f.L) * np.abs(w).max()
        den = u @ f.Omega_JN @ u - J * (u @ f.Omega_JD @ u)
        if den <= 0:
            continue
        u = u * np.sqrt(J * f.xi2 / den)  # back onto J(u) = J
        assert transmission_cost(f, u) >= T0 * (1 - 1e-6)


def test_fixed_topology(f1):
    f = build_forms(build_scenario(3, 2))
    J = 0.4 * info_bound_J0(f)
    full = fixed_topology_info(f, range(f.L), J)
    P, _ = fully_connected_info(f, J)
    assert full[0] == pytest.approx(P)
    assert fixed_topology_info(f1, [0], 0.2)[0] == pytest.approx(0.78628, abs=1e-5)
    assert fixed_topology_info(f, [], J) is None
    out = fixed_topology_info(f, [0, 4, 5], J)
    if out is not None:
        assert set(np.flatnonzero(out[1])) <= {0, 4, 5}


def test_diagonal_only_reach():
    f = build_forms(build_scenario(2, 0))
    diag = diag_indices(2)
    reach = restricted_J0(f, diag)
    assert reach < info_bound_J0(f)
    J = 0.5 * (reach + info_bound_J0(f))
    assert fixed_topology_info(f, diag, J) is None
    assert fixed_topology_info(f, range(4), J) is not None


def test_support_growth_lowers_transmission(rng):
    for _ in range(20):
        f = build_forms(random_scenario(rng, n_max=4))
        if f.N == 1:
            continue
        diag = list(diag_indices(f.N))
        off = [l for l in range(f.L) if l not in diag]
        J = 0.5 * restricted_J0(f, diag)
        sup = list(diag)
        prev = transmission_cost(f, fixed_topology_info(f, sup, J)[1])
        for l in rng.permutation(off):
            sup.append(int(l))
            T = transmission_cost(f, fixed_topology_info(f, sup, J)[1])
            assert T <= prev * (1 + 1e-9)
            prev = T


def test_fixed_energy_topology():
    f = build_forms(build_scenario(3, 5))
    J_full, _ = fully_connected_energy(f, f.total_link_cost + 2.0)
    J_fixed, _ = fixed_topology_energy(f, range(f.L), f.total_link_cost + 2.0)
    assert J_fixed == pytest.approx(J_full)
    assert fixed_topology_energy(f, range(f.L), 0.5 * f.total_link_cost) is None
