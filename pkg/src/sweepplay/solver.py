"""Sweeping-process and play-operator solvers.

All solvers use the catching-up recursion ``y_{k+1} = Proj_{C(tau_{k+1})}(y_k)``.
At a jump time ``t`` of the data the step is split in two: first onto
``C(t-)``, then onto ``C(t)``, so the output jumps exactly at the jump times
of ``C`` and satisfies ``y(t) = Proj_{C(t)}(y(t-))`` there.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import kernels
from .bvpath import BVPath, NondecreasingMap, compose, TIME_TOL
from .errors import (
    GridMismatch,
    InvalidInitialState,
    JumpyReparametrization,
    NonConvergence,
    RangeMismatch,
)
from .geometry import (
    MAX_ITER,
    TOL_PROJ,
    Ball,
    Box,
    ConvexSet,
    HalfSpace,
    Polyhedron,
    as_point,
    hausdorff_distance,
    norm,
)
from .reparam import FilledSetPath, GeodesicPath, SetPath, TranslatePath, fill_geodesics

INIT_TOL = 1e-9


@dataclass(frozen=True)
class Grid:
    """Strictly increasing solver times ``0 = tau_0 < ... < tau_N = T``."""

    times: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float).reshape(-1)
        if t.size < 2 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise GridMismatch("grid times must start at 0 and increase strictly")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @property
    def h(self) -> float:
        return float(np.max(np.diff(self.times)))

    def __len__(self):
        return self.times.size

    @classmethod
    def uniform(cls, T: float, h: float, include=()) -> Grid:
        """Uniform grid of step at most ``h`` that contains every time in ``include``."""
        if h <= 0:
            raise GridMismatch(f"grid step must be positive, got {h}")
        n = max(1, int(np.ceil(T / h - 1e-9)))
        base = np.linspace(0.0, T, n + 1)
        inc = np.unique(np.clip(np.asarray(list(include), dtype=float), 0.0, T))
        if inc.size:
            eps = 1e-9 * h
            k = np.clip(np.searchsorted(inc, base), 0, inc.size - 1)
            near = np.minimum(np.abs(inc[k] - base), np.abs(inc[np.maximum(k - 1, 0)] - base))
            base = base[(near > eps) | (near == 0)]
            base = np.union1d(base, inc)
            base[0], base[-1] = 0.0, T
        return cls(base)

    @classmethod
    def for_path(cls, u: BVPath, h: float) -> Grid:
        return cls.uniform(u.T, h, include=u.times)


@dataclass
class SweepOutput:
    """Discrete trajectory and its residual diagnostics.

    ``station_times`` lists the node times of the trajectory, a jump time
    appearing twice (left limit first).  ``constraint[j]`` is the distance of
    the state to the moving set at station ``j``; ``normal_cone[j]`` is
    ``|Proj_{C_j}(y_{j-1}) - y_j|`` (zero for an exact catching-up step).
    """

    trajectory: BVPath
    station_times: np.ndarray
    constraint: np.ndarray
    normal_cone: np.ndarray
    h: float
    method: str
    metadata: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "trajectory": self.trajectory.to_dict(),
            "residuals": {
                "times": self.station_times.tolist(),
                "constraint": self.constraint.tolist(),
                "normal_cone": self.normal_cone.tolist(),
            },
            "metadata": {"h": self.h, "method": self.method, "backend": kernels.BACKEND, **self.metadata},
        }


# ------------------------------------------------------------ stations


def _stations(times: np.ndarray, jump_times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Station times and left-limit flags; a jump time yields a left then a right station."""
    is_jump = np.isin(times, jump_times) & (times > 0)
    reps = np.where(is_jump, 2, 1)
    st = np.repeat(times, reps)
    left = np.zeros(st.size, dtype=bool)
    first = np.cumsum(reps) - reps
    left[first[is_jump]] = True
    return st, left


def _check_grid(grid: Grid, T: float, required: np.ndarray):
    if abs(grid.T - T) > TIME_TOL * max(1.0, T):
        raise GridMismatch(f"grid ends at {grid.T}, data at {T}")
    missing = np.setdiff1d(required, grid.times)
    if missing.size:
        raise GridMismatch(f"grid misses jump times {missing[:5].tolist()}")


def _assemble(times: np.ndarray, left_flags: np.ndarray, Y: np.ndarray) -> BVPath:
    right_idx = np.flatnonzero(~left_flags)
    R = Y[right_idx]
    L = R.copy()
    jl = np.flatnonzero(left_flags)
    # the left station sits right before its right station
    L[np.searchsorted(right_idx, jl + 1)] = Y[jl]
    return BVPath(times, L, R)


def _trajectory_stations(y: BVPath) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    st, left = _stations(y.times, y.times[y.jump_sizes() > 0])
    k = np.searchsorted(y.times, st)
    Y = np.where(left[:, None], y.left[k], y.right[k])
    return st, left, Y


def path_residuals(y: BVPath, C: SetPath, jump_times=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Constraint and normal-cone residuals of ``y`` along its own nodes."""
    jumps = C.jump_times() if jump_times is None else jump_times
    st, left = _stations(y.times, np.union1d(jumps, y.times[y.jump_sizes() > 0]))
    k = np.searchsorted(y.times, st)
    Y = np.where(left[:, None], y.left[k], y.right[k])
    if isinstance(C, TranslatePath):
        U = np.where(left[:, None], C.u.left_many(st), C.u.eval_many(st))
        X = U - Y
        constraint = np.sqrt(np.sum((X - C.Z.project_many(X)) ** 2, axis=1))
        Yprev = np.vstack([Y[:1], Y[:-1]])
        W = U - Yprev
        PW = C.Z.project_many(W)
        P = U - PW
        # a state already in the set is kept exactly
        inside = np.all(PW == W, axis=1)
        P[inside] = Yprev[inside]
        nc = np.sqrt(np.sum((P - Y) ** 2, axis=1))
    else:
        sets = [C.left_at(t) if lf else C.at(t) for t, lf in zip(st, left)]
        constraint = np.array([K.distance(yv) for K, yv in zip(sets, Y)])
        nc = np.zeros(st.size)
        for j in range(1, st.size):
            nc[j] = norm(sets[j].project(Y[j - 1]) - Y[j])
    nc[0] = 0.0
    return st, constraint, nc


# -------------------------------------------------------- catching up


def catching_up(C: SetPath, y0, grid: Grid, residuals: bool = True) -> SweepOutput:
    """Catching-up scheme for the sweeping process driven by ``C``."""
    y = as_point(y0, C.dim)
    jumps = np.asarray(C.jump_times(), dtype=float)
    _check_grid(grid, C.T, jumps)
    st, left = _stations(grid.times, jumps)
    Y = np.empty((st.size, C.dim))
    for j, (t, lf) in enumerate(zip(st, left)):
        K = C.left_at(t) if lf else C.at(t)
        y = K.project(y)
        Y[j] = y
    traj = _assemble(grid.times, left, Y)
    if residuals:
        rst, cons, nc = path_residuals(traj, C, jumps)
    else:
        rst, cons, nc = st, np.zeros(st.size), np.zeros(st.size)
    return SweepOutput(traj, rst, cons, nc, grid.h, "catching_up")


def _sweep_translate(Z: ConvexSet, U: np.ndarray, y_init: np.ndarray) -> np.ndarray:
    """Run ``y_j = U_j - Proj_Z(U_j - y_{j-1})`` with the fastest available kernel."""
    K = Z.simplify()
    if isinstance(K, Ball):
        return kernels.sweep_ball(U, K.center, K.radius, y_init)
    if isinstance(K, Box):
        return kernels.sweep_box(U, K.lower, K.upper, y_init)
    if isinstance(K, HalfSpace):
        return kernels.sweep_halfspace(U, K.normal, K.offset, y_init)
    if isinstance(K, Polyhedron):
        Y, it = kernels.sweep_polyhedron(U, K.normals, K.offsets, y_init, K.tol, K.max_iter)
        if it < 0:
            raise NonConvergence(f"Dykstra did not reach tol={K.tol} in {K.max_iter} cycles")
        return Y
    Y = np.empty_like(U)
    y = np.asarray(y_init, dtype=float)
    for j in range(U.shape[0]):
        w = U[j] - y
        p = Z.project(w)
        if not np.array_equal(p, w):
            y = U[j] - p
        Y[j] = y
    return Y


def _check_initial(z0, Z: ConvexSet) -> np.ndarray:
    z0 = as_point(z0, Z.dim)
    dist = Z.distance(z0)
    if dist > INIT_TOL:
        raise InvalidInitialState(f"z0 lies at distance {dist:.3e} from Z")
    return z0


def play(z0, u: BVPath, Z: ConvexSet, grid: Grid, residuals: bool = True) -> SweepOutput:
    """Play operator with characteristic ``Z``: catching-up on ``C_u(t) = u(t) - Z``."""
    z0 = _check_initial(z0, Z)
    jumps = u.jump_times()
    _check_grid(grid, u.T, jumps)
    st, left = _stations(grid.times, jumps)
    U = np.where(left[:, None], u.left_many(st), u.eval_many(st))
    Y = _sweep_translate(Z, U, u.eval(0.0) - z0)
    traj = _assemble(grid.times, left, Y)
    C = TranslatePath(u, Z)
    if residuals:
        rst, cons, nc = path_residuals(traj, C, jumps)
    else:
        rst, cons, nc = st, np.zeros(st.size), np.zeros(st.size)
    return SweepOutput(traj, rst, cons, nc, grid.h, "direct", {"backend": kernels.BACKEND})


def stop_and_q(z0, u: BVPath, y: BVPath) -> tuple[BVPath, BVPath]:
    """Stop ``s = u - y`` and ``q = 2y - u`` for a play output ``y``."""
    if abs(u.T - y.T) > TIME_TOL * max(1.0, u.T) or u.dim != y.dim:
        raise GridMismatch("input and output live on different horizons or dimensions")
    z0 = as_point(z0, u.dim)
    s = u - y
    if norm(s.eval(0.0) - z0) > INIT_TOL:
        raise InvalidInitialState("u(0) - y(0) differs from z0")
    q = 2.0 * y - u
    return s, q


def geodesic_solution(A: ConvexSet, B: ConvexSet, u0) -> BVPath:
    """Closed-form sweeping solution along ``t -> geodesic_set(A, B, t)`` on ``[0, 1]``.

    Constant ``u0`` up to the time ``t0`` with ``|u0 - Proj_B(u0)| = (1 - t0) rho``,
    then affine to ``Proj_B(u0)``.  With ``rho = 0`` the solution is constant.
    """
    u0 = as_point(u0, A.dim)
    if A.distance(u0) > INIT_TOL:
        raise InvalidInitialState("initial state is not in A")
    rho = hausdorff_distance(A, B)
    p = B.project(u0)
    if rho == 0.0:
        t0 = 1.0
    else:
        t0 = min(max(1.0 - norm(u0 - p) / rho, 0.0), 1.0)
    if t0 == 0.0:
        return BVPath([0.0, 1.0], [u0, p])
    if t0 == 1.0:
        return BVPath([0.0, 1.0], [u0, u0], [u0, p])
    return BVPath([0.0, t0, 1.0], [u0, u0, p])


@dataclass
class ReparamSolution:
    ell: NondecreasingMap
    C_tilde: SetPath
    y_hat: BVPath
    y: BVPath
    sigma_grid: Grid


def solve_reparametrized(
    z0, u: BVPath, Z: ConvexSet, grid: Grid, gap_solver: str = "closed_form"
) -> ReparamSolution:
    """Play through the Lipschitz reparametrization: ``P(u) = M(C_tilde) ∘ ell``.

    ``gap_solver="closed_form"`` resolves each filled jump with
    :func:`geodesic_solution`; ``"catching_up"`` runs catching-up on the
    geodesic sets over a sub-grid of step ``grid.h``.
    """
    z0 = _check_initial(z0, Z)
    y_init = u.eval(0.0) - z0
    C = TranslatePath(u, Z)
    ell, C_tilde = fill_geodesics(C)
    T = u.T
    if ell.upper == 0.0:
        y0 = C.at(0.0).project(y_init)
        y_hat = BVPath.constant(y0, T)
        sgrid = Grid.uniform(T, grid.h)
        return ReparamSolution(ell, C_tilde, y_hat, compose(y_hat, ell), sgrid)
    assert isinstance(C_tilde, FilledSetPath)
    sgrid = Grid.uniform(T, grid.h, include=C_tilde.breakpoints())
    if gap_solver == "catching_up":
        y_hat = catching_up(C_tilde, y_init, sgrid, residuals=False).trajectory
    elif gap_solver == "closed_form":
        y_hat = _closed_form_hat(C_tilde, y_init, sgrid)
    else:
        raise ValueError(f"unknown gap solver {gap_solver!r}")
    return ReparamSolution(ell, C_tilde, y_hat, compose(y_hat, ell), sgrid)


def _closed_form_hat(C_tilde: FilledSetPath, y_init: np.ndarray, sgrid: Grid) -> BVPath:
    s = sgrid.times
    u_t = C_tilde.u_tilde
    times: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    y = y_init
    start = 0.0
    for s0, s1, A, B in list(C_tilde.gaps) + [(s[-1], None, None, None)]:
        run = s[(s >= start) & (s <= s0)]
        Y = _sweep_translate(C_tilde.Z, u_t.eval_many(run), y)
        times.append(run)
        vals.append(Y)
        y = Y[-1]
        if s1 is None:
            break
        g = geodesic_solution(A, B, y)
        inner = g.times[1:]
        times.append(s0 + inner * (s1 - s0))
        vals.append(g.right[1:])
        y = g.right[-1]
        start = s1
    t = np.concatenate(times)
    v = np.vstack(vals)
    # gap endpoints are emitted twice (end of a run / end of a gap)
    keep_last = np.concatenate([np.diff(t) > 0, [True]])
    t, v = t[keep_last], v[keep_last]
    return BVPath(t, v)


def play_via_reparam(
    z0, u: BVPath, Z: ConvexSet, grid: Grid, gap_solver: str = "closed_form", residuals: bool = True
) -> SweepOutput:
    sol = solve_reparametrized(z0, u, Z, grid, gap_solver)
    traj = sol.y
    C = TranslatePath(u, Z)
    if residuals:
        rst, cons, nc = path_residuals(traj, C)
    else:
        n = traj.n_nodes
        rst, cons, nc = traj.times, np.zeros(n), np.zeros(n)
    return SweepOutput(traj, rst, cons, nc, sol.sigma_grid.h, "reparam", {"gap_solver": gap_solver})


def rate_transform(u: BVPath, gamma: NondecreasingMap) -> BVPath:
    """``u ∘ gamma`` for a continuous time change ``gamma : [0, T'] -> [0, T]`` onto."""
    if not gamma.is_continuous:
        raise JumpyReparametrization("time change has jumps")
    slack = TIME_TOL * max(1.0, u.T)
    if abs(gamma.value(0.0)) > slack or abs(gamma.value(gamma.T) - u.T) > slack:
        raise RangeMismatch("time change must map 0 to 0 and its horizon onto T")
    return compose(u, gamma)


def solve(z0, u: BVPath, Z: ConvexSet, grid: Grid, method: str = "direct") -> SweepOutput:
    if method == "direct":
        return play(z0, u, Z, grid)
    if method == "reparam":
        return play_via_reparam(z0, u, Z, grid)
    raise ValueError(f"unknown method {method!r}")


__all__ = [
    "Grid",
    "SweepOutput",
    "ReparamSolution",
    "catching_up",
    "play",
    "play_via_reparam",
    "solve_reparametrized",
    "stop_and_q",
    "geodesic_solution",
    "rate_transform",
    "path_residuals",
    "solve",
    "GeodesicPath",
    "TOL_PROJ",
    "MAX_ITER",
]
