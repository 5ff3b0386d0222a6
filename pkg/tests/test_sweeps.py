import math

import pytest

from sparsecollab import build_scenario
from sparsecollab.plotting import save_sweep_svg, write_dat
from sparsecollab.sweeps import COLUMNS, SweepSpec, run_row, run_sweep, succeeded


@pytest.mark.parametrize("kwargs", [
    dict(kind="info", axis="nope", grid=[0.1]),
    dict(kind="energy", axis="dnorm", grid=[0.1]),
    dict(kind="info", axis="dnorm", grid=[]),
    dict(kind="info", axis="dnorm", grid=[0.1, float("nan")]),
    dict(kind="info", axis="dnorm", grid=[0.1, 0.3, 0.2]),
    dict(kind="info", axis="alpha_c", grid=[0.1]),
    dict(kind="info", axis="alpha_c", grid=[0.1], dnorm=0.2, jcheck=0.1),
    dict(kind="energy", axis="alpha_c", grid=[0.1], dnorm=0.2),
    dict(kind="info", axis="alpha_c", grid=[0.1], budget=1.0),
])
def test_spec_rejects(kwargs):
    with pytest.raises(ValueError):
        SweepSpec(**kwargs)


def test_descending_grid_allowed():
    SweepSpec("joint", "alpha_s", [0.3, 0.1], dnorm=0.3)


def test_infeasible_row_is_a_status():
    s = build_scenario(2, 0)
    row = run_row(s, SweepSpec("info", "dnorm", [1.5]), 1.5)
    assert row["status"] == "infeasible" and row["P"] is None
    assert not succeeded(row)


def test_rows_in_grid_order_serial_and_parallel():
    s = build_scenario(2, 1)
    spec = SweepSpec("info", "dnorm", [0.2, 0.4, 0.6])
    a = run_sweep(s, spec)
    b = run_sweep(s, spec, jobs=2)
    assert [r["axis_value"] for r in a] == [0.2, 0.4, 0.6]
    assert all(succeeded(r) and r["S"] is None for r in a)
    assert [r["P"] for r in a] == pytest.approx([r["P"] for r in b], rel=1e-12)


def test_noise_ratio_sets_zeta(s1):
    spec = SweepSpec("energy", "noise_ratio", [0.5, 2.0], budget=1.0)
    rows = run_sweep(s1, spec)
    assert rows[0]["J"] > rows[1]["J"]  # more measurement noise, less information


def test_writers(tmp_path):
    s = build_scenario(2, 0)
    rows = run_sweep(s, SweepSpec("info", "dnorm", [0.2, 0.5]))
    rows.append(dict.fromkeys(COLUMNS, None) | {"axis_value": 0.9, "status": "infeasible"})
    write_dat(rows, ["axis_value", "P", "T_share"], tmp_path / "x.dat", header="demo")
    lines = (tmp_path / "x.dat").read_text().splitlines()
    assert lines[0] == "# demo" and lines[1] == "# axis_value P T_share"
    assert lines[-1].split()[1] == "nan"
    assert math.isclose(float(lines[2].split()[2]), rows[0]["T"] / rows[0]["P"], rel_tol=1e-9)
    save_sweep_svg(rows, "dnorm", tmp_path / "a.svg")
    save_sweep_svg(rows, "dnorm", tmp_path / "b.svg")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()
