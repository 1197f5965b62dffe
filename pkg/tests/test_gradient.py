import numpy as np
import pytest

from polarcomp.construction import build_construction
from polarcomp.errors import DivergenceError, ValidationError
from polarcomp.gradient import (
    GdTrace,
    LeastSquaresProblem,
    default_step_size,
    gd_solve,
    residual,
)
from polarcomp.runtime import default_model


def test_residual_of_exact_solution_is_zero():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((10, 4))
    x = rng.standard_normal((4, 2))
    assert residual(a, x, a @ x) <= 1e-10


def test_residual_at_zero_is_norm_of_y():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((10, 4))
    y = rng.standard_normal((10, 2))
    assert residual(a, np.zeros((4, 2)), y) == pytest.approx(np.linalg.norm(y))


def test_residual_matches_independent_computation():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((7, 3))
    x = rng.standard_normal((3, 2))
    y = rng.standard_normal((7, 2))
    direct = float(np.sqrt(np.sum((a @ x - y) ** 2)))
    assert residual(a, x, y) == pytest.approx(direct, rel=1e-12)


def test_residual_shape_validation():
    with pytest.raises(ValidationError):
        residual(np.ones((3, 2)), np.ones((3, 1)), np.ones((3, 1)))


def test_identity_converges_in_one_step():
    y = np.arange(8.0).reshape(4, 2)
    problem = LeastSquaresProblem(a=np.eye(4), y=y, mu=1.0, iterations=1)
    x, trace = gd_solve(problem, "uncoded", n_workers=2)
    assert np.allclose(x, y, atol=1e-12)
    assert trace.residuals()[-1] <= 1e-12


def test_default_step_size_is_inverse_largest_eigenvalue():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((20, 6))
    gram = a.T @ a
    mu = default_step_size(gram)
    lam_max = np.linalg.eigvalsh(gram).max()
    assert mu == pytest.approx(1.0 / lam_max, rel=1e-6)


@pytest.fixture(scope="module")
def desk_problem():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((64, 16))
    y = rng.standard_normal((64, 4))
    return a, y


def test_converges_to_least_squares_optimum(desk_problem):
    a, y = desk_problem
    problem = LeastSquaresProblem(a=a, y=y, iterations=200)
    c = build_construction(8, 0.25)
    x, trace = gd_solve(problem, "coded", construction=c, seed=5)
    x_star, *_ = np.linalg.lstsq(a, y, rcond=None)
    assert trace.residuals()[-1] <= residual(a, x_star, y) + 1e-6
    r = trace.residuals()
    assert (np.diff(r) <= 1e-12).all()


def test_coded_and_uncoded_iterates_agree(desk_problem):
    a, y = desk_problem
    problem = LeastSquaresProblem(a=a, y=y, iterations=100)
    c = build_construction(8, 0.25)
    xc, trc = gd_solve(problem, "coded", construction=c, seed=6)
    xu, tru = gd_solve(problem, "uncoded", n_workers=6, seed=6)
    assert np.abs(xc - xu).max() <= 1e-8
    # values identical, only per-iteration virtual times differ
    assert [r["residual"] for r in trc.iterations] == pytest.approx(
        [r["residual"] for r in tru.iterations], rel=1e-8
    )


def test_per_iteration_times_match_their_definitions(desk_problem):
    a, y = desk_problem
    problem = LeastSquaresProblem(a=a, y=y, iterations=30)
    c = build_construction(8, 0.25)
    model = default_model()
    _, trc = gd_solve(problem, "coded", construction=c, model=model, seed=7)
    for row in trc.iterations:
        assert row["iter_seconds"] == pytest.approx(
            row["wait_seconds"] + row["decode_seconds"]
        )
    _, tru = gd_solve(problem, "uncoded", n_workers=6, model=model, seed=7)
    for it, row in enumerate(tru.iterations):
        times = model.sample_finish_times(np.random.default_rng([7, it]), 6)
        assert row["iter_seconds"] == pytest.approx(times.max())
        assert row["decode_seconds"] == 0.0


def test_coded_pays_more_worker_seconds_but_finishes_faster(desk_problem):
    a, y = desk_problem
    problem = LeastSquaresProblem(a=a, y=y, iterations=100)
    c = build_construction(8, 0.25)
    _, trc = gd_solve(problem, "coded", construction=c, seed=8)
    _, tru = gd_solve(problem, "uncoded", n_workers=6, seed=8)
    assert sum(r["worker_seconds"] for r in trc.iterations) > sum(
        r["worker_seconds"] for r in tru.iterations
    )
    faster = np.mean(trc.iter_times() < tru.iter_times())
    assert faster >= 0.8


def test_divergence_detected_and_cites_mu(desk_problem):
    a, y = desk_problem
    problem = LeastSquaresProblem(a=a, y=y, mu=10.0, iterations=50)
    with pytest.raises(DivergenceError, match="mu"):
        gd_solve(problem, "uncoded", n_workers=4, seed=9)


def test_gd_scheme_validation(desk_problem):
    a, y = desk_problem
    problem = LeastSquaresProblem(a=a, y=y, iterations=2)
    with pytest.raises(ValidationError):
        gd_solve(problem, "coded")  # missing construction
    with pytest.raises(ValidationError):
        gd_solve(problem, "uncoded")  # missing worker count
    with pytest.raises(ValidationError):
        gd_solve(problem, "quantum", n_workers=2)


def test_trace_requires_increasing_times():
    trace = GdTrace()
    trace.add(iter=0, virtual_time_s=1.0, iter_seconds=1.0, wait_seconds=1.0,
              decode_seconds=0.0, residual=1.0, worker_seconds=1.0, checksum="x")
    with pytest.raises(ValidationError):
        trace.add(iter=1, virtual_time_s=1.0, iter_seconds=0.0, wait_seconds=0.0,
                  decode_seconds=0.0, residual=1.0, worker_seconds=1.0, checksum="y")


def test_problem_validation():
    with pytest.raises(ValidationError):
        LeastSquaresProblem(a=np.ones((4, 2)), y=np.ones((3, 1)))
    with pytest.raises(ValidationError):
        LeastSquaresProblem(a=np.ones((4, 2)), y=np.ones((4, 1)), mu=-1.0)
    with pytest.raises(ValidationError):
        LeastSquaresProblem(a=np.ones((4, 2)), y=np.ones((4, 1)), iterations=0)
