import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from islab import dynamics as dyn
from islab.errors import InvalidArgument, PreconditionError, UnsupportedModel
from islab.operators import make_dense, make_diagonal, make_scaled_identity_block

from helpers import crandn


def block_system(mu=2.0, mult=8, dim=32, strength=0.1):
    a = make_scaled_identity_block(mu, mult, dim)
    return a, [dyn.quadratic_rank_one(dim, mult, strength)]


def construct(seed, horizon=40, y_scale=0.05, **kw):
    a, ks = block_system(**kw)
    rng = np.random.default_rng(seed)
    y = y_scale * crandn(rng, a.dim) / math.sqrt(a.dim)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        con = dyn.construct_growing(a, ks, dyn.harmonic, y, 1.0, 2, horizon=horizon)
    return a, ks, y, con


def test_iterate_identity_keeps_norm():
    tr = dyn.iterate(make_diagonal(np.ones(3)), [], [1.0, 0.0, 0.0], 10)
    assert np.array_equal(tr.norms, np.ones(11))


def test_iterate_doubling():
    tr = dyn.iterate(make_diagonal(np.full(2, 2.0)), [], [1.0, 0.0], 12)
    assert np.array_equal(tr.norms, 2.0 ** np.arange(13))


def test_iterate_rejects_bad_input():
    a = make_diagonal(np.ones(3))
    with pytest.raises(InvalidArgument):
        dyn.iterate(a, [], np.ones(3), 0)
    with pytest.raises(InvalidArgument):
        dyn.iterate(a, [], np.ones(4), 3)
    ks = [dyn.zero_map(3)] * 2
    with pytest.raises(InvalidArgument):
        dyn.iterate(a, ks, np.ones(3), 5)


def test_iterate_quadratic_map_exact():
    a = make_diagonal(np.zeros(2))
    k = dyn.quadratic_rank_one(2, 0, 1.0)
    tr = dyn.iterate(a, [k], [0.5, 0.0], 3)
    assert np.allclose(tr.norms, [0.5, 0.25, 0.0625, 0.0625 ** 2], rtol=0, atol=1e-16)


def test_overflow_guard_keeps_log_norm():
    tr = dyn.iterate(make_diagonal(np.full(2, 1e10)), [], [1.0, 0.0], 40)
    assert tr.guarded_from is not None and not tr.truncated
    assert np.allclose(tr.log_norms, np.arange(41) * math.log(1e10), rtol=1e-12)


def test_check_lower_bound_rate_zero_passes(rng):
    tr = dyn.iterate(make_dense(0.1 * crandn(rng, 5, 5)), [], crandn(rng, 5), 20)
    rep = dyn.check_lower_bound(tr, dyn.harmonic, 0.0, 0)
    assert rep.passed and rep.first_violation is None


def test_check_lower_bound_identity_fails_at_rate_two():
    tr = dyn.iterate(make_diagonal(np.ones(2)), [], [1.0, 0.0], 10)
    rep = dyn.check_lower_bound(tr, dyn.harmonic, 2.0, 0)
    # 1 >= 2^n/(n+1) holds for n = 0, 1 and fails first at n = 2
    assert not rep.passed and rep.first_violation == 2


def test_check_lower_bound_margins():
    tr = dyn.iterate(make_diagonal(np.full(2, 2.0)), [], [1.0, 0.0], 8)
    rep = dyn.check_lower_bound(tr, dyn.harmonic, 2.0, 1)
    n = np.arange(1, 9)
    assert np.allclose(rep.margins, 2.0 ** n * (1 - 1 / (n + 1)), rtol=1e-14)


def test_construct_growing_bound_and_ball(seed):
    a, ks, y, con = construct(seed)
    assert con.certified_horizon >= 25
    assert np.linalg.norm(con.x - y) <= 1.0
    tr = dyn.iterate(a, ks, con.x, con.certified_horizon)
    rep = dyn.check_lower_bound(tr, dyn.harmonic, 2.0, 2, con.certified_horizon)
    assert rep.passed and rep.margins.min() >= 0
    assert all(m >= 0 for m in con.log["inequality_margins"])


def test_construct_growing_large_y():
    a, ks = block_system()
    y = np.zeros(32, dtype=complex)
    y[0] = 5.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        con = dyn.construct_growing(a, ks, dyn.harmonic, y, 1.0, 2, horizon=40)
    assert np.linalg.norm(con.x - y) <= 1.0
    tr = dyn.iterate(a, ks, con.x, con.certified_horizon)
    assert dyn.check_lower_bound(tr, dyn.harmonic, 2.0, 2, con.certified_horizon).passed


def test_construct_growing_deep_horizon():
    a, ks, y, con = construct(0, horizon=400)
    assert con.depth >= 2
    tr = dyn.iterate(a, ks, con.x, con.certified_horizon)
    assert dyn.check_lower_bound(tr, dyn.harmonic, 2.0, 2, con.certified_horizon).passed


def test_construct_growing_deterministic(seed):
    c1 = construct(seed)[3]
    c2 = construct(seed)[3]
    assert np.array_equal(c1.x, c2.x)
    assert c1.log == c2.log


def test_construct_growing_chain_is_nested(seed):
    con = construct(seed, horizon=400)[3]
    ch = con.chain
    assert ch.prefix_ok()
    for k, xk in enumerate(ch.x_list, start=1):
        q = ch.F_list[k - 1]
        assert np.linalg.norm(q.conj().T @ xk) <= 1e-10
        assert abs(np.linalg.norm(xk) - 1) <= 1e-12
    assert all(e1 > e2 for e1, e2 in zip(ch.eps_list, ch.eps_list[1:]))


@given(st.integers(0, 10 ** 6))
@settings(max_examples=20)
def test_pythagoras_on_chain_split(s):
    con = construct(s % 3, horizon=400)[3]
    rng = np.random.default_rng(s)
    v = crandn(rng, 32)
    for k in range(1, len(con.chain.F_list) + 1):
        f, m = con.chain.split(k, v)
        assert abs(np.vdot(f, m)) <= 1e-10 * np.linalg.norm(v) ** 2
        assert abs(np.linalg.norm(f) ** 2 + np.linalg.norm(m) ** 2 - np.linalg.norm(v) ** 2) \
            <= 1e-10 * np.linalg.norm(v) ** 2


def test_construct_growing_preconditions():
    a, ks = block_system()
    y = np.zeros(32)
    with pytest.raises(PreconditionError):
        dyn.construct_growing(a, ks, dyn.harmonic, y, 0.5, 0)   # a_0 = 1 >= r/2
    with pytest.raises(InvalidArgument):
        dyn.construct_growing(a, ks, dyn.harmonic, y, -1.0, 2)
    with pytest.raises(UnsupportedModel):
        dyn.construct_growing(make_diagonal(np.ones(4)), [], dyn.harmonic, np.zeros(4), 1.0, 2)


def test_kernel_supply_warning():
    a, ks = block_system(mult=2, dim=8)
    with pytest.warns(UserWarning):
        con = dyn.construct_growing(a, ks, dyn.harmonic, np.zeros(8), 1.0, 2, horizon=10 ** 4)
    assert con.depth <= 2 and con.warning


def test_orbit_difference_in_perturbation_span(seed):
    rng = np.random.default_rng(seed)
    dim = 12
    a = make_dense(0.2 * crandn(rng, dim, dim))
    q1 = np.linalg.qr(crandn(rng, dim, 2))[0]
    q2 = np.linalg.qr(crandn(rng, dim, 1))[0]
    ks = [dyn.CompactMap(q1, lambda x: np.array([np.sin(x[0]), x[1] * x[2]])),
          dyn.CompactMap(q2, lambda x: np.array([np.vdot(x, x)]))]
    ks = ks * 3
    x0 = crandn(rng, dim)
    x0 *= 0.5 / np.linalg.norm(x0)
    tr = dyn.iterate(a, ks, x0, 6)
    ax = x0.astype(complex)
    for j in range(1, 7):
        ax = a.apply(ax)
        basis = dyn.perturbation_span(a, ks, j)
        d = tr.states[j] - ax
        resid = d - basis @ (basis.conj().T @ d)
        assert np.linalg.norm(resid) <= 1e-10 * max(1.0, np.linalg.norm(d))


@given(st.integers(0, 10 ** 6))
@settings(max_examples=25)
def test_scale_equivariance(s):
    rng = np.random.default_rng(s)
    dim = 6
    a = make_dense(0.4 * crandn(rng, dim, dim))
    q = np.linalg.qr(crandn(rng, dim, 2))[0]
    ks = [dyn.CompactMap(q, lambda x: np.array([0.3 * x[0] ** 2, 0.2 * x[1] * x[2]]))] * 8
    theta = 0.5 * np.exp(1j * rng.uniform(0, 2 * np.pi)) + 0.5
    a2, ks2 = dyn.normalized_system(a, ks, theta)
    x0 = crandn(rng, dim)
    t1 = dyn.iterate(a, ks, x0, 8)
    t2 = dyn.iterate(a2, ks2, x0, 8)
    for n in range(9):
        ref = theta ** n * t1.states[n]
        assert np.linalg.norm(t2.states[n] - ref) <= 1e-9 * max(1.0, np.linalg.norm(ref))


def test_ensemble_identity_block_all_hit():
    a = make_scaled_identity_block(2.0, 8, 32)
    st_ = dyn.residual_growth_ensemble(a, [dyn.zero_map(32)], dyn.harmonic, range(0, 201, 2), 50,
                                       (np.zeros(32), 1.0), 200, seed=3)
    assert st_.fraction == 1.0


def test_ensemble_deterministic_across_jobs():
    a = make_scaled_identity_block(2.0, 8, 32)
    args = (a, [dyn.zero_map(32)], dyn.harmonic, range(0, 41, 2), 30, (np.zeros(32), 1.0), 40)
    s1 = dyn.residual_growth_ensemble(*args, seed=5, jobs=1)
    s2 = dyn.residual_growth_ensemble(*args, seed=5, jobs=4)
    assert s1.first_hit == s2.first_hit


def test_ensemble_empty_index_set():
    a = make_scaled_identity_block(2.0, 2, 4)
    with pytest.raises(InvalidArgument):
        dyn.residual_growth_ensemble(a, [], dyn.harmonic, [500], 5, (np.zeros(4), 1.0), 10)


def test_compact_map_rejects_nonorthonormal_range():
    with pytest.raises(InvalidArgument):
        dyn.CompactMap(np.ones((3, 2)), lambda x: x[:2])


def test_sample_ball_radius(rng):
    pts = dyn.sample_ball(np.ones(4), 0.5, 500, rng)
    assert np.max(np.linalg.norm(pts - 1, axis=1)) <= 0.5
