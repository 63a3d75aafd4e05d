import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sweepplay.bvpath import BVPath, arc_length, compose, d_inf
from sweepplay.geometry import Ball, Box, Translate, geodesic_set
from sweepplay.reparam import (
    ConstantSetPath,
    FilledSetPath,
    TranslatePath,
    constant_speed_check,
    fill_geodesics,
    fill_segments,
    set_arc_length,
    set_path_from_dict,
)

from test_bvpath import bv_paths


def slopes(f):
    dt = np.diff(f.times)
    return np.diff(np.stack([f.right[:-1], f.left[1:]], axis=1), axis=1)[:, 0] / dt[:, None]


def max_slope_distance(f, g):
    """Sup of |f' - g'| over the common refinement (exact for piecewise-linear paths)."""
    t = np.union1d(f.times, g.times)
    mid = 0.5 * (t[:-1] + t[1:])
    def d(p):
        k = np.searchsorted(p.times, mid, side="right") - 1
        return slopes(p)[k]
    return float(np.max(np.linalg.norm(d(f) - d(g), axis=1)))


# ------------------------------------------------------------- examples


def test_ramp_is_its_own_filling():
    u = BVPath([0, 1], [[0], [1]])
    ell, ut = fill_segments(u)
    assert ut == u
    assert constant_speed_check(ut, u.variation(), u.T) == 0.0


def test_pure_jump_filled_by_identity():
    u = BVPath([0, 0.5, 1], [[0], [0], [1]], [[0], [1], [1]])
    ell, ut = fill_segments(u)
    assert ell.value(0.49) == 0.0 and ell.value(0.5) == 1.0
    s = np.linspace(0, 1, 11)
    assert np.allclose(ut.eval_many(s)[:, 0], s)
    assert constant_speed_check(ut, 1.0, 1.0) == 0.0


def test_constant_input_fills_to_constant():
    u = BVPath.constant([0.3, -0.2], 2.0)
    ell, ut = fill_segments(u)
    assert np.all(ell.right == 0)
    assert ut == BVPath.constant([0.3, -0.2], 2.0)
    assert compose(ut, ell) == u


def test_two_jumps_with_idle_time():
    # jump at 0.25, rest until 0.75, jump again
    u = BVPath([0, 0.25, 0.75, 1], [[0, 0], [0, 0], [1, 0], [1, 0]], [[0, 0], [1, 0], [1, 1], [1, 0]])
    ell, ut = fill_segments(u)
    V = u.variation()
    assert V == pytest.approx(3.0)
    assert constant_speed_check(ut, V, u.T) == pytest.approx(0.0, abs=1e-12)
    # the idle stretch and the last descent are hit by ell, the jumps are gaps
    assert [tuple(g) for g in np.c_[ell.left[:, 0], ell.right[:, 0]]] == pytest.approx(
        [(0, 0), (0, 1 / 3), (1 / 3, 2 / 3), (1, 1)]
    )
    assert compose(ut, ell) == u


def test_constant_set_path():
    C = ConstantSetPath(Ball([0, 0], 1.0), 3.0)
    ell, Ct = fill_geodesics(C)
    assert np.all(ell.right == 0) and Ct is C


def test_gap_carries_the_geodesic():
    Z = Ball([0.0, 0.0], 1.0)
    u = BVPath([0, 0.5, 1], [[0, 0], [0, 0], [2, 0]], [[0, 0], [2, 0], [2, 0]])
    ell, Ct = fill_geodesics(TranslatePath(u, Z))
    assert isinstance(Ct, FilledSetPath) and len(Ct.gaps) == 1
    s0, s1, A, B = Ct.gaps[0]
    assert (s0, s1) == (0.0, 1.0)
    rng = np.random.default_rng(3)
    X = 3 * rng.standard_normal((50, 2))
    for lam in (0.25, 0.5, 0.8):
        G = geodesic_set(Translate(Z, [0, 0]), Translate(Z, [2, 0]), lam)
        K = Ct.at(s0 + lam * (s1 - s0))
        assert np.allclose(K.project_many(X), G.project_many(X), atol=1e-9)


def test_set_path_json_round_trip():
    u = BVPath([0, 0.5, 1], [[0, 0], [0, 0], [2, 0]], [[0, 0], [2, 0], [2, 0]])
    C = TranslatePath(u, Box([-1, -1], [1, 1]))
    back = set_path_from_dict(json.loads(json.dumps(C.to_dict())))
    assert back.u == u and back.Z == C.Z
    K = ConstantSetPath(Ball([1.0], 2.0), 2.0)
    back = set_path_from_dict(json.loads(json.dumps(K.to_dict())))
    assert back.K == K.K and back.T == 2.0
    with pytest.raises(ValueError):
        set_path_from_dict({"kind": "spiral"})


# ----------------------------------------------------------- properties


@settings(max_examples=80, deadline=None)
@given(bv_paths())
def test_exact_identities(u):
    ell, ut = fill_segments(u)
    V = u.variation()
    assert compose(ut, ell) == u
    assert ut.is_continuous
    assert ut.variation() == pytest.approx(V, rel=1e-12, abs=1e-12)
    # rounding in sigma differences scales with the speed V / T
    assert constant_speed_check(ut, V, u.T) <= 1e-9 * max(1.0, V / u.T)
    # Lipschitz bound
    if ut.n_nodes > 1:
        assert np.max(np.linalg.norm(slopes(ut), axis=1)) <= V / u.T + 1e-9 * max(1.0, V)


@settings(max_examples=60, deadline=None)
@given(bv_paths(), st.sampled_from(["ball", "box"]))
def test_set_arc_length_matches_point_arc_length(u, kind):
    Z = Ball([0.0, 0.0], 0.7) if kind == "ball" else Box([-1.0, -0.2], [0.5, 0.3])
    ell_C, V_C = set_arc_length(TranslatePath(u, Z))
    ell_u = arc_length(u)
    assert V_C == pytest.approx(u.variation(), rel=1e-12, abs=1e-12)
    assert np.allclose(ell_C.left, ell_u.left, atol=1e-12) and np.allclose(ell_C.right, ell_u.right, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(bv_paths())
def test_filled_set_path_off_gaps_is_translate(u):
    Z = Ball([0.0, 0.0], 1.0)
    ell, Ct = fill_geodesics(TranslatePath(u, Z))
    if not isinstance(Ct, FilledSetPath):
        return
    _, ut = fill_segments(u)
    for t in np.linspace(0, u.T, 13):
        s = ell.value(t)
        if Ct.gap_at(s) is None:
            assert np.allclose(Ct.at(s).shift, ut.eval(s))


def test_stability_under_bv_convergence():
    # u moves along x with a jump; u_n adds a y-hat of height 1/n on a fixed window
    u = BVPath([0, 1, 1.5, 3], [[0, 0], [1, 0], [1, 0], [2, 0]], [[0, 0], [1, 0], [1.5, 0], [2, 0]])
    _, ut = fill_segments(u)
    ell = arc_length(u)
    rows = []
    # the hat slope 4/n dominates the base slope 1/3 until n >> 12
    for n in (1, 2, 4, 8, 16, 32, 64, 128):
        hat = BVPath([0, 2, 2.25, 2.5, 3], [[0, 0], [0, 0], [0, 1 / n], [0, 0], [0, 0]])
        un = u + hat
        eln, utn = fill_segments(un)
        rows.append((d_inf(utn, ut), max_slope_distance(utn, ut), d_inf(eln, ell)))
    rows = np.array(rows)
    assert np.all(np.diff(rows, axis=0) < 0)
    assert np.all(rows[-1] < 0.1 * rows[0])
