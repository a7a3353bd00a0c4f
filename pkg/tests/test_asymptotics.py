import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frontlab import asymptotics as asy
from frontlab.errors import ArgumentError


def closed_form_I(A):
    """Weierstrass substitution: int_0^{pi/2} dθ/(1 + a sin θ) = (1/b) log[(1+a-b)(a+b)/((1+a+b)(a-b))]."""
    a = 2 * math.pi * A
    b = math.sqrt(a * a - 1)
    inner = math.log1p(1 / (a + b)) - math.log(1 + a + b) + 2 * math.log(a + b)
    return 4 / (2 * math.pi) * inner / b


# J(A) by 30-digit tanh-sinh quadrature in w (s = exp(-w^2)), frozen
J_REF = {1e5: 7.129630590064224e-05, 1e6: 7.774761516010797e-06}


def test_trivial():
    assert asy.cellular_crossing_integral(0) == 1.0
    assert asy.loglip_crossing_integral(0) == 1.0
    with pytest.raises(ArgumentError):
        asy.cellular_crossing_integral(-1)


@pytest.mark.parametrize("A", [1.0, 10.0, 1e3, 1e5, 1e6])
def test_cellular_closed_form(A):
    assert asy.cellular_crossing_integral(A) == pytest.approx(closed_form_I(A), rel=1e-9)


@pytest.mark.parametrize("A", sorted(J_REF))
def test_loglip_reference(A):
    assert asy.loglip_crossing_integral(A) == pytest.approx(J_REF[A], rel=1e-9)


@pytest.mark.parametrize("A", [10.0, 1e3, 1e5])
def test_simpson_agreement(A):
    assert asy.cellular_crossing_simpson(A) == pytest.approx(asy.cellular_crossing_integral(A), rel=1e-8)
    assert asy.loglip_crossing_simpson(A) == pytest.approx(asy.loglip_crossing_integral(A), rel=1e-8)


def test_monotone_in_A():
    assert asy.cellular_crossing_integral(100) < asy.cellular_crossing_integral(10)
    assert asy.loglip_crossing_integral(100) < asy.loglip_crossing_integral(10)


def test_loglip_below_linear_on_inner_interval():
    # s sqrt(-log s) >= s on (0, 1/e), so the log-Lipschitz integrand is smaller there
    from scipy.integrate import quad
    A = 1e4
    e = math.exp(-1)
    j, _ = quad(asy._loglip_integrand, 0, e, args=(A,), points=[1 / A, 10 / A], limit=200)
    i, _ = quad(lambda s: 1 / (1 + A * s), 0, e, points=[1 / A, 10 / A], limit=200)
    assert j < i


def test_decade_stability():
    I = [asy.cellular_crossing_integral(A) * A / math.log(A) for A in (1e4, 1e5, 1e6)]
    J = [asy.loglip_crossing_integral(A) * A / math.sqrt(math.log(A)) for A in (1e4, 1e5, 1e6)]
    for v in (I, J):
        for a, b in zip(v, v[1:]):
            assert abs(b - a) / a <= 0.10


def recs(A, s, converged=True):
    return [SimpleNamespace(A=a, sT=v, converged=converged) for a, v in zip(A, s)]


AS = np.array([8.0, 16, 32, 64, 128])


def test_fit_synthetic_logA():
    f = asy.fit_growth_law(recs(AS, AS / np.log(AS)))
    assert f.q == pytest.approx(1.0, abs=0.02) and f.selected == "A_over_logA"
    assert f.per_model_rss[f.selected] == min(f.per_model_rss.values())


def test_fit_synthetic_linear():
    f = asy.fit_growth_law(recs(AS, 5 * AS))
    assert f.q == pytest.approx(0.0, abs=0.02) and f.c == pytest.approx(5.0, rel=0.01)
    assert f.selected == "linear"


def test_fit_errors():
    with pytest.raises(ArgumentError):
        asy.fit_growth_law(recs([8, 16, 32], [1, 2, 3]))
    with pytest.raises(ArgumentError):
        asy.fit_growth_law(recs(AS, [1, 2, -3, 4, 5]))
    with pytest.raises(ArgumentError):  # A < 3 rows are dropped
        asy.fit_growth_law(recs([1, 2, 8, 16, 32], [1, 2, 3, 4, 5]))


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-3, 1e3), st.lists(st.floats(0.5, 50), min_size=5, max_size=5))
def test_fit_scale_equivariance(lam, s):
    base = asy.fit_growth_law(recs(AS, s))
    scaled = asy.fit_growth_law(recs(AS, [lam * v for v in s]))
    assert scaled.c == pytest.approx(lam * base.c, rel=1e-12)
    assert scaled.q == pytest.approx(base.q, rel=1e-12, abs=1e-12)
    assert scaled.selected == base.selected


@pytest.mark.parametrize("model", asy.MODELS)
def test_model_selection_consistency(model):
    hits = 0
    for seed in range(100):
        r = np.random.default_rng(seed)
        s = 3.0 / asy.normalizer(model, AS) * np.exp(0.01 * r.normal(size=AS.size))
        hits += asy.fit_growth_law(recs(AS, s)).selected == model
    assert hits >= 95


def test_ratio_table():
    s = 0.3 * AS / np.log(AS)
    t = asy.ratio_table(recs(AS, s), "A_over_logA")
    assert t.spread < 1e-12 and len(t) == 5
    t2 = asy.ratio_table(recs(AS, s), "A_over_sqrtlogA")
    assert t2.trend == "decreasing" and t2.change <= -0.2
    t3 = asy.ratio_table(recs(AS, 1 + AS), "linear")
    assert t3.rows[-1][1] == pytest.approx(129 / 128) and t3.trend == "decreasing"
