"""Checks of variational characterizations and identities on solver outputs."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any, Sequence

import numpy as np

from .bvpath import BVPath, NondecreasingMap, compose, d_inf
from .errors import NotContinuousInput, PointNotInSet, TestFunctionOutsideZ
from .geometry import TOL_PROJ, ConvexSet, Translate, as_point, normal_cone_contains
from .reparam import SetPath, TranslatePath, constant_speed_check, fill_segments
from .solver import (
    Grid,
    SweepOutput,
    _stations,
    play,
    play_via_reparam,
    rate_transform,
    solve_reparametrized,
    stop_and_q,
)

Z_TOL = 1e-9
NC_TOL = 1e-9
PHASE_TOL = 1e-12
# defects below this are rounding noise and count as converged
DEFECT_FLOOR = 1e-9


def _common_times(*paths: BVPath) -> np.ndarray:
    return np.unique(np.concatenate([p.times for p in paths]))


def check_integral_vi(u: BVPath, y: BVPath, z_tests: Sequence[BVPath], Z: ConvexSet | None = None) -> float:
    """Largest discrete value of ``∫ <z - u + y, dy>`` over the test paths.

    Continuous cells pair the forward difference of ``y`` with the integrand
    at the left grid point; a jump atom ``y(t) - y(t-)`` is paired with the
    integrand at ``t`` itself, as the measure of ``{t}`` is.  With ``Z``
    given, every test path is checked to stay in ``Z``.
    """
    times = _common_times(u, y, *z_tests)
    jumps = np.union1d(u.jump_times(), y.jump_times())
    for z in z_tests:
        jumps = np.union1d(jumps, z.jump_times())
    st, left = _stations(times, jumps)
    U = np.where(left[:, None], u.left_many(st), u.eval_many(st))
    Y = np.where(left[:, None], y.left_many(st), y.eval_many(st))
    dY = np.diff(Y, axis=0)
    # station j+1 is the right value of a jump whenever station j is its left limit
    atom = left[:-1]
    worst = -np.inf
    for z in z_tests:
        Zv = np.where(left[:, None], z.left_many(st), z.eval_many(st))
        if Z is not None:
            dist = np.sqrt(np.sum((Zv - Z.project_many(Zv)) ** 2, axis=1))
            if dist.max() > Z_TOL:
                raise TestFunctionOutsideZ(f"test path leaves Z by {dist.max():.3e}")
        G = Zv - U + Y
        pair = np.where(atom[:, None], G[1:], G[:-1])
        worst = max(worst, float(np.sum(pair * dY)))
    return worst if z_tests else 0.0


def sample_in_set(Z: ConvexSet, anchor, n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """``n`` points of ``Z``: Gaussian draws around ``anchor`` projected onto ``Z``."""
    anchor = as_point(anchor, Z.dim)
    X = anchor + scale * rng.standard_normal((n, Z.dim))
    return Z.project_many(X)


def vi_test_family(u: BVPath, y: BVPath, Z: ConvexSet, seed: int = 0, n_random: int = 4) -> list[BVPath]:
    """Constants in ``Z``, the trajectory ``u - y`` and random piecewise-constant ``Z``-valued paths."""
    rng = np.random.default_rng(seed)
    s = u - y
    anchor = s.eval(0.0)
    T = u.T
    tests = [BVPath.constant(p, T) for p in sample_in_set(Z, anchor, 3, rng)]
    tests.append(s)
    for _ in range(n_random):
        k = int(rng.integers(2, 8))
        cuts = np.sort(rng.uniform(0.0, T, size=k - 1))
        times = np.concatenate([[0.0], cuts, [T]])
        vals = sample_in_set(Z, anchor, k + 1, rng)
        # right-continuous steps: value vals[i] on [times[i], times[i+1])
        left = np.vstack([vals[:1], vals[:-2], vals[-2:-1]])
        right = np.vstack([vals[:-1], vals[-2:-1]])
        tests.append(BVPath(times, left, right))
    return tests


def check_normal_cone(C: SetPath, output: SweepOutput, tol: float = NC_TOL) -> int:
    """Number of moving steps with ``-Δy`` outside the normal cone at the new state."""
    y = output.trajectory
    jumps = np.union1d(np.asarray(C.jump_times(), dtype=float), y.jump_times())
    st, left = _stations(y.times, jumps)
    Y = np.where(left[:, None], y.left_many(st), y.eval_many(st))
    fails = 0
    for j in range(1, st.size):
        step = Y[j - 1] - Y[j]
        if not np.any(step):
            continue
        K = C.left_at(st[j]) if left[j] else C.at(st[j])
        try:
            ok = normal_cone_contains(K, Y[j], step, tol)
        except PointNotInSet:
            ok = False
        fails += not ok
    return fails


def corrupt(output: SweepOutput, seed: int = 0, amplitude: float = 1e-3) -> SweepOutput:
    """Negative control: the same output with noise added to every node value."""
    rng = np.random.default_rng(seed)
    y = output.trajectory
    noise = amplitude * rng.standard_normal(y.right.shape)
    bad = BVPath(y.times, y.left + noise, y.right + noise)
    return SweepOutput(bad, output.station_times, output.constraint, output.normal_cone, output.h, output.method + "+noise")


def check_rate_independence(z0, u: BVPath, Z: ConvexSet, gamma: NondecreasingMap, h: float) -> float:
    """``d_inf(P(u ∘ γ), P(u) ∘ γ)`` with both solves at step ``h``."""
    ug = rate_transform(u, gamma)
    y_of_ug = play(z0, ug, Z, Grid.for_path(ug, h), residuals=False).trajectory
    y = play(z0, u, Z, Grid.for_path(u, h), residuals=False).trajectory
    return d_inf(y_of_ug, compose(y, gamma))


def _regular_cells(moving: np.ndarray, kink: np.ndarray, dY: np.ndarray, h: float) -> np.ndarray:
    """Cells away from kinks of the input and from phase switches of the output.

    A phase switch is a change of the moving flag or an ``O(1)`` turn of the
    direction of ``Δy`` between neighbouring cells (an active-set change);
    smooth turning moves the direction by ``O(h)`` per cell, so turns above
    ``sqrt(h)`` are switches.  Both cells around a switch are excluded.
    """
    ok = ~kink
    ok[0] = False
    nrm = np.sqrt(np.sum(dY**2, axis=1))
    unit = np.divide(dY, nrm[:, None], out=np.zeros_like(dY), where=nrm[:, None] > 0)
    turn = np.sqrt(np.sum(np.diff(unit, axis=0) ** 2, axis=1))
    switch = (moving[1:] != moving[:-1]) | (moving[1:] & moving[:-1] & (turn > np.sqrt(h)))
    ok[1:] &= ~switch
    ok[:-1] &= ~switch
    return ok


def check_sq_identities(z0, u: BVPath, Z: ConvexSet, grid: Grid) -> tuple[float, float]:
    """Rectangle identities for ``S`` and ``Q``.

    ``u' = s' + y'`` and ``q' = y' - s'`` are the diagonals of the rectangle
    with sides ``s'`` and ``y'``.  Returns ``orth = max |<Δs, Δy>| / h^2``
    and ``speed = max | |Δq| - |Δu| | / h`` over regular cells.
    """
    if not u.is_continuous:
        raise NotContinuousInput("the rectangle identities need a continuous input")
    y = play(z0, u, Z, grid, residuals=False).trajectory
    s, q = stop_and_q(z0, u, y)
    t = grid.times
    dt = np.diff(t)
    dU = np.diff(u.eval_many(t), axis=0)
    dY = np.diff(y.eval_many(t), axis=0)
    dS = np.diff(s.eval_many(t), axis=0)
    dQ = np.diff(q.eval_many(t), axis=0)
    moving = np.sqrt(np.sum(dY**2, axis=1)) > PHASE_TOL
    kink = np.isin(t[:-1], u.times[1:-1])
    ok = _regular_cells(moving, kink, dY, grid.h)
    if not np.any(ok):
        return 0.0, 0.0
    orth = np.abs(np.sum(dS * dY, axis=1))[ok] / dt[ok] ** 2
    speed = np.abs(np.sqrt(np.sum(dQ**2, axis=1)) - np.sqrt(np.sum(dU**2, axis=1)))[ok] / dt[ok]
    return float(orth.max()), float(speed.max())


def check_constant_speed_w(z0, u: BVPath, Z: ConvexSet, grid: Grid) -> float:
    """Largest deviation of ``|ŵ'|`` from ``V(u)/T`` on ``ell(cont u)``, ``ŵ = 2ŷ - ũ``."""
    _, u_tilde = fill_segments(u)
    V = u.variation()
    if V == 0.0:
        return 0.0
    sol = solve_reparametrized(z0, u, Z, grid)
    sig = sol.sigma_grid.times
    gaps = getattr(sol.C_tilde, "gaps", ())
    ds = np.diff(sig)
    mid = 0.5 * (sig[:-1] + sig[1:])
    in_gap = np.zeros(mid.size, dtype=bool)
    for s0, s1, _, _ in gaps:
        in_gap |= (mid > s0) & (mid < s1)
    Yh = sol.y_hat.eval_many(sig)
    W = 2.0 * Yh - u_tilde.eval_many(sig)
    dW = np.diff(W, axis=0)
    moving = np.sqrt(np.sum(np.diff(Yh, axis=0) ** 2, axis=1)) > PHASE_TOL
    kink = np.isin(sig[:-1], u_tilde.times[1:-1])
    ok = _regular_cells(moving, kink, np.diff(Yh, axis=0), grid.h) & ~in_gap
    # the first cell after a gap starts a new phase
    ok[1:] &= ~in_gap[:-1]
    if not np.any(ok):
        return 0.0
    speed = np.sqrt(np.sum(dW**2, axis=1))[ok] / ds[ok]
    return float(np.max(np.abs(speed - V / u.T)))


def check_jump_law(u: BVPath, Z: ConvexSet, y: BVPath) -> float:
    """Largest ``|y(t) - Proj_{u(t) - Z}(y(t-))|`` over the jump times of ``u``."""
    worst = 0.0
    for t in u.jump_times():
        K = Translate(Z, u.eval(t))
        worst = max(worst, float(np.linalg.norm(y.eval(t) - K.project(y.left_limit(t)))))
    return worst


def reparam_identity_defects(u: BVPath) -> dict[str, float]:
    """``u = ũ∘ℓ`` (0 or 1 mismatch flag), ``|V(ũ) - V(u)|`` and the constant-speed defect."""
    ell, u_tilde = fill_segments(u)
    V = u.variation()
    return {
        "compose_mismatch": 0.0 if compose(u_tilde, ell) == u else 1.0,
        "variation_gap": abs(u_tilde.variation() - V),
        "speed_defect": constant_speed_check(u_tilde, V, u.T),
    }


@dataclass
class CheckResult:
    name: str
    residual: float
    tolerance: float
    passed: bool
    h: float

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _result(name: str, residual: float, tol: float, h: float) -> CheckResult:
    return CheckResult(name, float(residual), float(tol), bool(residual <= tol), float(h))


def verify_solution(z0, u: BVPath, Z: ConvexSet, out: SweepOutput, h: float, seed: int = 0) -> list[CheckResult]:
    """Standard verification suite on a direct solve."""
    y = out.trajectory
    C = TranslatePath(u, Z)
    checks = [
        _result("constraint", float(out.constraint.max()), TOL_PROJ, h),
        _result("jump_law", check_jump_law(u, Z, y), TOL_PROJ, h),
        _result("integral_vi", check_integral_vi(u, y, vi_test_family(u, y, Z, seed), Z), 10 * h, h),
        _result("normal_cone_failures", check_normal_cone(C, out), 0, h),
    ]
    d = reparam_identity_defects(u)
    checks.append(_result("reparam_compose", d["compose_mismatch"], 0.0, h))
    checks.append(_result("reparam_variation", d["variation_gap"], 0.0, h))
    checks.append(_result("reparam_speed", d["speed_defect"], 1e-9, h))
    return checks


__all__ = [
    "check_integral_vi",
    "vi_test_family",
    "sample_in_set",
    "check_normal_cone",
    "corrupt",
    "check_rate_independence",
    "check_sq_identities",
    "check_constant_speed_w",
    "check_jump_law",
    "reparam_identity_defects",
    "CheckResult",
    "verify_solution",
    "play_via_reparam",
]
