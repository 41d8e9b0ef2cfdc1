import numpy as np
import pytest
from scipy.stats import spearmanr

from conftest import rel
from liftlqr.bench import CSV_COLUMNS, ProblemSpec, build_problem, run_benchmark
from liftlqr.dpare import solve_hench_laub, solve_yang
from liftlqr.errors import GenerationFailed
from liftlqr.lifted_dare import algorithm_3_1, flop_estimate
from liftlqr.model import PeriodicSystem, converged_periodic_riccati, validate
from liftlqr.spacecraft import SpacecraftParams, field_in_orbit_frame, gen_magnetic_attitude, gen_wheels_magnetic


@pytest.fixture(scope="module")
def magnetic100():
    return gen_magnetic_attitude(p=100)


def test_magnetic_structure(magnetic100):
    s = magnetic100
    assert (s.p, s.n, s.m) == (100, 6, 3)
    assert s.is_phase_constant("A", "Q")
    assert not np.array_equal(s.B[0], s.B[1])
    assert validate(s).ok
    assert np.linalg.cond(s.A[0]) < 1e6


def test_magnetic_solvers_agree(magnetic100):
    sol = algorithm_3_1(magnetic100)
    y, hl = solve_yang(magnetic100), solve_hench_laub(magnetic100)
    assert sol.residual <= 1e-8
    assert rel(sol.Phat, y.P[0]) <= 1e-6
    assert max(rel(y.P[k], hl.P[k]) for k in range(100)) <= 1e-6
    assert y.info["fast_path"]


def test_equatorial_field_is_phase_constant():
    params = SpacecraftParams(p=8, inclination=0.0, check=False)
    b = [field_in_orbit_frame(t, params) for t in np.linspace(0, 5000, 7)]
    assert np.ptp(np.array(b), axis=0).max() == 0.0
    s = gen_magnetic_attitude(params)
    assert np.ptp(s.B, axis=0).max() == 0.0
    # torque can never act along the field, so one axis is uncontrollable
    with pytest.raises(GenerationFailed):
        gen_magnetic_attitude(p=8, inclination=0.0)


def test_wheels_structure_and_agreement():
    s = gen_wheels_magnetic(p=100)
    assert (s.p, s.n, s.m) == (100, 9, 6)
    assert np.ptp(s.B[:, :, :3], axis=0).max() == 0.0
    assert np.ptp(s.B[:, :, 3:], axis=0).max() > 0.0
    sol = algorithm_3_1(s)
    y, hl = solve_yang(s), solve_hench_laub(s)
    assert rel(sol.Phat, y.P[0]) <= 1e-6 and rel(hl.P[0], y.P[0]) <= 1e-6
    assert max(sol.residual, y.residual_max, hl.residual_max) <= 1e-8


@pytest.mark.parametrize("inclination", [0.0, 0.5, 1.2, np.radians(87)])
def test_wheels_controllable_for_any_field(inclination):
    s = gen_wheels_magnetic(p=20, inclination=inclination, check=False)
    converged_periodic_riccati(s, tol=1e-10, max_periods=20_000)


def test_generators_deterministic_and_validated():
    a, b = gen_wheels_magnetic(p=12), gen_wheels_magnetic(p=12)
    for f in "ABQR":
        np.testing.assert_array_equal(getattr(a, f), getattr(b, f))
    with pytest.raises(ValueError):
        gen_magnetic_attitude(p=1)


def test_problem_spec_forces_shapes():
    spec = ProblemSpec(kind="magnetic", p=10)
    assert (spec.kind, spec.n, spec.m) == ("magnetic-attitude", 6, 3)
    assert ProblemSpec(kind="wheels").n == 9
    with pytest.raises(ValueError):
        ProblemSpec(kind="magnetic", n=4)
    with pytest.raises(ValueError):
        ProblemSpec(kind="comet")
    rs = build_problem(ProblemSpec(kind="random", p=3, n=2, m=1, seed=4))
    assert (rs.p, rs.n, rs.m) == (3, 2, 1)


def test_benchmark_magnetic_report(magnetic100):
    rep = run_benchmark(magnetic100, trials=3, warmup=1)
    assert [r.solver for r in rep.records] == ["algorithm31", "yang", "hench_laub"]
    for r in rep.records:
        assert r.success and r.residual_max <= 1e-8 and r.trials == 3 and len(r.times) == 3
        assert r.deterministic
    assert rep.record("algorithm31").median_s < rep.record("hench_laub").median_s
    lines = rep.to_csv().strip().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS) and len(lines) == 4
    assert "single BLAS thread" in rep.environment
    assert '"records"' in rep.to_json()


def test_benchmark_gate_and_failures():
    s = gen_magnetic_attitude(p=10)
    strict = run_benchmark(s, ["yang"], trials=3, tolerance=0.0)
    assert not strict.records[0].success and "exceeds" in strict.records[0].error
    # singular A: classical solvers fail, the lifted one still answers
    A = np.stack([np.eye(2), np.diag([1.0, 0.0])])
    sing = PeriodicSystem(A, np.ones((2, 2, 1)), np.repeat(np.eye(2)[None], 2, 0), np.ones((2, 1, 1)))
    rep = run_benchmark(sing, trials=3)
    by = {r.solver: r for r in rep.records}
    assert by["algorithm31"].success
    assert not by["yang"].success and "SingularStateMatrix" in by["yang"].error
    assert not by["hench_laub"].success
    assert "false" in rep.to_csv()
    with pytest.raises(ValueError):
        run_benchmark(s, trials=2)
    with pytest.raises(ValueError):
        run_benchmark(s, ["newton"], trials=3)


def test_benchmark_records_never_succeed_above_gate():
    rep = run_benchmark(ProblemSpec(kind="random", p=4, n=3, m=2, seed=1), trials=3, tolerance=1e-8)
    for r in rep.records:
        assert r.success == (r.residual_max <= 1e-8)


def test_algorithm31_scaling_tracks_flop_model():
    ps = [25, 50, 100, 200]
    times = [run_benchmark(ProblemSpec(kind="magnetic", p=p), ["algorithm31"], trials=5).records[0].median_s
             for p in ps]
    predicted = [flop_estimate(p, 6, 3, "structured")["total"] for p in ps]
    assert spearmanr(predicted, times).statistic >= 0.9
    # quadrupling p more than quadruples the time
    assert times[3] / times[1] > 4.0
