import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sweepplay.bvpath import (
    BVPath,
    NondecreasingMap,
    arc_length,
    bv_norm_dist,
    compose,
    d_inf,
    d_us,
    stieltjes,
)
from sweepplay.errors import DimensionMismatch, HorizonMismatch, OutOfDomain, RangeMismatch


def unit_jump():
    return BVPath([0, 0.5, 1], [[0], [0], [1]], [[0], [1], [1]])


def zigzag(eps, k, T=1.0):
    t = np.linspace(0, T, 2 * k + 1)
    v = np.where(np.arange(t.size) % 2 == 1, eps, 0.0)
    return BVPath(t, v[:, None])


def brute_variation(f, n):
    """Variation along a uniform partition with n cells (lower bound converging to V)."""
    t = np.linspace(0, f.T, n + 1)
    return float(np.sum(np.linalg.norm(np.diff(f.eval_many(t), axis=0), axis=1)))


@st.composite
def bv_paths(draw, dim=2, T=None):
    m = draw(st.integers(1, 6))
    gaps = draw(st.lists(st.floats(0.05, 1.0), min_size=m, max_size=m))
    times = np.concatenate([[0.0], np.cumsum(gaps)])
    if T is not None:
        times = times * (T / times[-1])
    # a 1e-6 lattice keeps every segment and jump resolvable in double precision
    vals = st.integers(-3_000_000, 3_000_000).map(lambda k: k * 1e-6)
    left = np.array(draw(st.lists(st.lists(vals, min_size=dim, max_size=dim), min_size=m + 1, max_size=m + 1)))
    jumps = draw(st.lists(st.booleans(), min_size=m + 1, max_size=m + 1))
    shift = np.array(draw(st.lists(st.lists(vals, min_size=dim, max_size=dim), min_size=m + 1, max_size=m + 1)))
    right = left + np.where(np.array(jumps)[:, None], shift, 0.0)
    right[0] = left[0]
    return BVPath(times, left, right)


# ------------------------------------------------------------- examples


def test_eval_and_left_limit_examples():
    c = BVPath.constant([2.0, -1.0], 3.0)
    for t in (0.0, 1.3, 3.0):
        assert np.array_equal(c.eval(t), [2, -1]) and np.array_equal(c.left_limit(t), [2, -1])
    j = unit_jump()
    assert j.eval(0.5)[0] == 1 and j.left_limit(0.5)[0] == 0
    assert j.left_limit(0.0)[0] == j.eval(0.0)[0]
    ramp = BVPath([0, 1], [[0], [1]])
    assert ramp.eval(0.3)[0] == pytest.approx(0.3)


def test_out_of_domain():
    with pytest.raises(OutOfDomain):
        unit_jump().eval(1.5)
    with pytest.raises(OutOfDomain):
        unit_jump().variation(0.2, 1.2)
    with pytest.raises(OutOfDomain):
        stieltjes(unit_jump(), 0.6, 0.2)


def test_variation_examples():
    assert BVPath([0, 1], [[0], [1]]).variation() == 1.0
    assert unit_jump().variation() == 1.0
    zz = BVPath([0, 0.5, 1], [[0], [1], [0]])
    assert zz.variation() == 2.0
    # partition sums increase toward the exact value
    sums = [brute_variation(zz, n) for n in (3, 11, 101, 1001)]
    assert np.all(np.diff(sums) >= -1e-12)
    assert sums[-1] == pytest.approx(2.0, abs=3e-3)


def test_arc_length_examples():
    assert np.all(arc_length(BVPath.constant([1.0], 2.0)).right == 0)
    ell = arc_length(BVPath([0, 1], [[0], [1]]))
    assert ell.value(0.3) == pytest.approx(0.3)
    ell = arc_length(unit_jump())
    assert ell.value(0.49) == 0.0 and ell.value(0.5) == 1.0 and ell.value(1.0) == 1.0
    assert np.array_equal(ell.jump_times(), unit_jump().jump_times())


def test_metric_examples():
    f = zigzag(0.0, 3)
    assert d_inf(f, f) == d_us(f, f) == bv_norm_dist(f, f) == 0
    eps = 0.01
    g = BVPath.constant([eps], 1.0)
    assert d_inf(f, g) == pytest.approx(eps) and d_us(f, g) == pytest.approx(eps)
    assert bv_norm_dist(f, g) == pytest.approx(eps)
    k = 5
    z = zigzag(eps, k)
    assert d_inf(f, z) == pytest.approx(eps)
    assert bv_norm_dist(f, z) == pytest.approx(eps + 2 * k * eps)


def test_metric_mismatches():
    with pytest.raises(DimensionMismatch):
        d_inf(BVPath.constant([0.0], 1.0), BVPath.constant([0.0, 0.0], 1.0))
    with pytest.raises(HorizonMismatch):
        d_inf(BVPath.constant([0.0], 1.0), BVPath.constant([0.0], 2.0))


def test_stieltjes_examples():
    f = BVPath([0, 0.3, 1], [[0, 0], [1, 2], [0, 1]], [[0, 0], [2, 2], [0, 1]])
    assert np.array_equal(stieltjes(f, 0, 1, "[]"), f.eval(1.0) - f.eval(0.0))
    c = BVPath.constant([1.0], 1.0)
    for kind in ("(]", "[]", "[)", "()"):
        assert np.all(stieltjes(c, 0.2, 0.7, kind) == 0)
    J = f.eval(0.3) - f.left_limit(0.3)
    assert np.array_equal(stieltjes(f, 0.3, 0.3, "[]"), J)
    assert np.array_equal(stieltjes(f, 0.3, 0.3, "(]"), [0, 0])
    assert np.array_equal(stieltjes(f, 0.1, 0.3, "()") + stieltjes(f, 0.3, 0.3, "[]"), stieltjes(f, 0.1, 0.3, "(]"))


def test_compose_examples():
    f = BVPath([0, 0.4, 1], [[0, 1], [2, 0], [1, 1]], [[0, 1], [3, 0], [1, 1]])
    assert compose(f, NondecreasingMap.identity(1.0)) == f
    ramp = BVPath([0, 2], [[0], [2]])
    h = NondecreasingMap([0, 1], [[0.7], [0.7]])
    c = compose(ramp, h)
    assert np.allclose(c.eval_many(np.linspace(0, 1, 5)), 0.7)
    with pytest.raises(RangeMismatch):
        compose(ramp, NondecreasingMap([0, 1], [[0.0], [3.0]]))


def test_nondecreasing_map_validation():
    with pytest.raises(ValueError):
        NondecreasingMap([0, 1], [[1.0], [0.5]])
    with pytest.raises(ValueError):
        NondecreasingMap([0, 1], [[0.0], [1.0]], [[0.0], [0.5]])


def test_csv_double_row_and_round_trip():
    j = unit_jump()
    text = j.to_csv()
    assert sum(1 for line in text.splitlines() if line.startswith("0.5,")) == 2
    assert BVPath.from_csv(io.StringIO(text)) == j
    on_grid = j.to_csv(grid=np.linspace(0, 1, 11))
    assert sum(1 for line in on_grid.splitlines() if line.startswith("0.5,")) == 2


def test_json_validation():
    with pytest.raises(DimensionMismatch):
        BVPath.from_dict({"T": 1, "nodes": [{"t": 0, "right": [0]}, {"t": 1, "right": [0, 1]}]})
    with pytest.raises(HorizonMismatch):
        BVPath.from_dict({"T": 2, "nodes": [{"t": 0, "right": [0]}, {"t": 1, "right": [1]}]})


# ----------------------------------------------------------- properties


@settings(max_examples=80, deadline=None)
@given(bv_paths(), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_variation_additivity(f, a, b, c):
    a, b, c = sorted(x * f.T for x in (a, b, c))
    assert f.variation(a, b) + f.variation(b, c) == pytest.approx(f.variation(a, c), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(bv_paths())
def test_measure_consistency(f):
    # total variation equals the sum of |mu(]t_i, t_{i+1}])| on a partition that splits every segment finely
    t = np.union1d(np.linspace(0, f.T, 400), f.times)
    mids = np.union1d(t, 0.5 * (t[:-1] + t[1:]))
    cells = [stieltjes(f, a, b, "()") for a, b in zip(mids[:-1], mids[1:])]
    atoms = [stieltjes(f, s, s, "[]") for s in mids]
    total = sum(np.linalg.norm(x) for x in cells) + sum(np.linalg.norm(x) for x in atoms)
    assert total == pytest.approx(f.variation(), rel=1e-9, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(bv_paths())
def test_serialization_round_trips(f):
    assert BVPath.from_dict(json.loads(json.dumps(f.to_dict()))) == f
    assert BVPath.from_csv(f.to_csv()) == f


@settings(max_examples=60, deadline=None)
@given(bv_paths())
def test_arc_length_properties(f):
    ell = arc_length(f)
    V = f.variation()
    assert np.all(np.diff(ell.right[:, 0]) >= -1e-12)
    if V > 0:
        assert ell.upper == pytest.approx(f.T)
        # Lipschitz on continuity segments: slope = T * speed / V
        dt = np.diff(f.times)
        slope = np.diff(np.concatenate([ell.right[:-1, 0, None], ell.left[1:, 0, None]], axis=1), axis=1)[:, 0] / dt
        assert np.allclose(slope, f.T * f.segment_lengths() / dt / V)
        # the image misses exactly the half-open gaps ]ell(t-), ell(t)]
        s = np.linspace(0, f.T, 2001)
        vals = ell.eval_many(s)[:, 0]
        for t in f.jump_times():
            lo, hi = ell.left_limit(t)[0], ell.eval(t)[0]
            assert not np.any((vals > lo + 1e-12) & (vals < hi - 1e-12))


@settings(max_examples=50, deadline=None)
@given(bv_paths(dim=1, T=1.0), bv_paths(dim=2, T=1.0))
def test_chain_rule_at_jumps(gseed, f):
    g = arc_length(gseed)
    if g.upper == 0.0:
        return
    h = NondecreasingMap(g.times, g.left / g.upper, g.right / g.upper)
    fh = compose(f, h)
    for t in h.jump_times():
        atom = stieltjes(fh, t, t, "[]")
        a, b = h.left_limit(t)[0], h.value(t)
        # f∘h jumps from f(h(t-)) (approached from the left) to f(h(t))
        assert np.allclose(atom, f.eval(b) - fh.left_limit(t))
        assert np.allclose(fh.left_limit(t), f.left_limit(a) if a > 0 and _arrives_from_left(h, t) else f.eval(a))


def _arrives_from_left(h, t):
    """True when h strictly increases just before t."""
    k = int(np.searchsorted(h.times, t))
    return h.left[k, 0] > h.right[k - 1, 0]


@settings(max_examples=60, deadline=None)
@given(bv_paths(), st.lists(st.floats(0, 1), min_size=1, max_size=5))
def test_refine_preserves_path(f, extra):
    g = f.refine([x * f.T for x in extra])
    s = np.linspace(0, f.T, 97)
    assert np.allclose(g.eval_many(s), f.eval_many(s))
    assert g.variation() == pytest.approx(f.variation())
