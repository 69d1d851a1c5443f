import numpy as np
import pytest

from ucgs.core import ContractError
from ucgs.gug import GugSchedule, gug_run, sliding_nominal_counts, xi_k
from ucgs.objectives import make_instance
from ucgs.sets import L1Ball, Simplex


@pytest.fixture(scope="module")
def quad():
    return make_instance("quadratic", Simplex(50), seed=0)


@pytest.fixture(scope="module")
def pnorm():
    return make_instance("pnorm", Simplex(50), seed=0)


def sched(prob, regime):
    o = prob.objective
    return GugSchedule(regime, o.nu, o.M)


# -- schedules


def test_schedule_validation():
    with pytest.raises(ContractError):
        GugSchedule("sliding", 1.0, 1.0)
    with pytest.raises(ContractError):
        GugSchedule("newton")
    with pytest.raises(ContractError):
        GugSchedule("cg_equiv", 0.5, 0.0)


def test_schedule_values():
    s = GugSchedule("sliding", 0.5, 2.0)
    D = 2.0
    assert s.beta(4, D) == pytest.approx(2.0 * 4 ** (-0.25) / D**0.5)
    assert s.eta(4, D) == pytest.approx(6 * s.beta(4, D) * D**2 / 4)
    assert GugSchedule.gamma(1) == 1.0
    e = GugSchedule("cg_equiv", 1.0, 3.0)
    assert e.beta(3, D) == pytest.approx(3.0 * 0.5)
    assert e.eta(3, D) == pytest.approx(6 * 1.5 * 4)


# -- xi_k and nominal counts


def test_xi_examples():
    assert xi_k(1, 0.5, 1.0, 1.0, 1.0) == pytest.approx(1.0 / 6.0, rel=1e-15)
    assert xi_k(1, 0.5, 1.0, 1.0, 0.0) == 0.0
    assert xi_k(1, 0.5, 1.3, 2.0, 0.4) == pytest.approx(xi_k(1, 0.5, 1.3, 1.0, 0.4) / 8, rel=1e-14)
    with pytest.raises(ContractError):
        xi_k(1, 1.0, 1.0, 1.0, 1.0)


@pytest.mark.parametrize("nu, e_grad, e_lin", [(0.5, 0.8, 1.6), (1.0, 0.5, 1.0)])
def test_nominal_count_exponents(nu, e_grad, e_lin):
    a = sliding_nominal_counts(nu, 1.0, 1.0, 1e-2)
    b = sliding_nominal_counts(nu, 1.0, 1.0, 1e-4)
    assert np.log(b[0] / a[0]) / np.log(100) == pytest.approx(e_grad, rel=1e-12)
    assert np.log(b[1] / a[1]) / np.log(100) == pytest.approx(e_lin, rel=1e-12)


def test_sliding_exponent_beats_cg_at_half():
    nu = 0.5
    assert 4 / (1 + 3 * nu) < 1 / nu


# -- runs


def test_cg_rate_on_quadratic(quad):
    o = quad.objective
    r = gug_run(quad, sched(quad, "cg"), 2000)
    f = np.array(r.trace.column("f_y"))
    k = np.arange(1, 2001)
    D2 = quad.set.diameter() ** 2
    assert np.all(f <= 8 * o.M * D2 / k)
    env = np.minimum.accumulate(f)
    assert env[-1] < env[99] < env[9]
    assert r.counters.lmo_calls == r.counters.grad_evals == 2000


def test_cg_equiv_one_step_per_iteration(quad):
    r = gug_run(quad, sched(quad, "cg_equiv"), 200)
    assert max(r.inner_steps) <= 1


def test_sliding_inner_counts(pnorm):
    N = 300
    r = gug_run(pnorm, sched(pnorm, "sliding"), N)
    assert all(it <= k + 1 for k, it in enumerate(r.inner_iterations, 1))
    assert r.counters.lmo_calls <= sum(k + 1 for k in range(1, N + 1))


@pytest.mark.parametrize(
    "kind, regime", [("quadratic", "cg"), ("quadratic", "cg_equiv"), ("pnorm", "cg"), ("pnorm", "sliding")]
)
def test_outer_recurrence_and_feasibility(kind, regime):
    prob = make_instance(kind, L1Ball(np.zeros(20), 1.0), seed=7)
    o, X, xh = prob.objective, prob.set, prob.xstar
    fxh = o.f(xh)
    worst = [np.inf]

    def check(s):
        for p in (s.x, s.y, s.z):
            assert X.contains(p, 1e-10)
        g = s.gamma
        dx = s.x - s.x_prev
        rhs = (
            g * s.eta
            + 0.5 * s.beta * g * (np.sum((s.x_prev - xh) ** 2) - np.sum((s.x - xh) ** 2))
            - 0.5 * s.beta * g * (dx @ dx)
            + o.M * g ** (1 + o.nu) / (1 + o.nu) * np.linalg.norm(dx) ** (1 + o.nu)
        )
        lhs = s.f_y - (1 - g) * s.f_y_prev - g * fxh
        worst[0] = min(worst[0], rhs - lhs)

    gug_run(prob, sched(prob, regime), 300, callback=check)
    assert worst[0] >= -1e-8


def test_certificate_bounds_true_gap(pnorm):
    r = gug_run(pnorm, sched(pnorm, "cg"), 500, certify=True)
    for row in r.trace:
        assert row.certified_gap >= row.true_gap - 1e-9
    assert r.counters.lmo_calls == 1000


def test_stopping_options(pnorm):
    r = gug_run(pnorm, sched(pnorm, "cg"), 10**6, stop_certified=1e-2)
    assert r.trace[-1].certified_gap <= 1e-2
    assert r.trace[len(r.trace) - 2].certified_gap > 1e-2
    r = gug_run(pnorm, sched(pnorm, "cg"), 10**6, lmo_budget=123)
    assert r.counters.lmo_calls == 123
    r = gug_run(pnorm, sched(pnorm, "cg"), 10**6, stop_gap=1e-3)
    assert r.trace[-1].true_gap <= 1e-3


def test_runs_are_deterministic(pnorm):
    a = gug_run(pnorm, sched(pnorm, "sliding"), 50)
    b = gug_run(pnorm, sched(pnorm, "sliding"), 50)
    assert a.trace.to_csv() == b.trace.to_csv()
