"""Points of R^d and closed convex sets with projection oracles.

Every set class implements ``project`` (nearest point) and, where cheap,
a vectorised ``project_many``.  Ball, Box, HalfSpace, Translate and
Dilation project in closed form; Polyhedron and DilationIntersection use
Dykstra's alternating projections.

``Translate(base, shift)`` is the reflected translate ``{shift - z : z in
base}``, which is the moving set ``u(t) - Z`` of the play operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

import numpy as np

from . import kernels
from .errors import (
    DimensionMismatch,
    InfeasibleSet,
    NonConvergence,
    PointNotInSet,
    UnsupportedPair,
)

TOL_PROJ = 1e-10
MAX_ITER = 10_000
# Dykstra iterations on a two-set intersection before switching to the SLSQP polish
STALL_ITER = 500


def as_point(x, dim: int | None = None) -> np.ndarray:
    """Return ``x`` as a finite 1-D float array, optionally checking its length."""
    p = np.array(x, dtype=float).reshape(-1)
    if p.size == 0:
        raise DimensionMismatch("a point needs at least one coordinate")
    if not np.all(np.isfinite(p)):
        raise ValueError(f"point has non-finite coordinates: {p}")
    if dim is not None and p.size != dim:
        raise DimensionMismatch(f"expected a point in R^{dim}, got R^{p.size}")
    return p


def norm(x) -> float:
    return float(np.sqrt(np.dot(x, x)))


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class ConvexSet:
    """Nonempty closed convex subset of R^d."""

    dim: int

    def project(self, x) -> np.ndarray:
        raise NotImplementedError

    def project_many(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.array([self.project(x) for x in X]).reshape(X.shape)

    def distance(self, x) -> float:
        x = as_point(x, self.dim)
        return norm(x - self.project(x))

    def contains(self, x, tol: float = TOL_PROJ) -> bool:
        return self.distance(x) <= tol

    def simplify(self) -> ConvexSet:
        """Equivalent set in a more specific class when one exists."""
        return self

    def reflect_translate(self, shift) -> ConvexSet:
        """The set ``{shift - z : z in self}``, simplified when possible."""
        return Translate(self, shift)

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError

    def __eq__(self, other):
        if not isinstance(other, ConvexSet):
            return NotImplemented
        return type(self) is type(other) and _canon(self.to_dict()) == _canon(other.to_dict())

    __hash__ = object.__hash__


def _canon(obj):
    if isinstance(obj, dict):
        return tuple(sorted((k, _canon(v)) for k, v in obj.items()))
    if isinstance(obj, (list, tuple)):
        return tuple(_canon(v) for v in obj)
    return obj


@dataclass(frozen=True, eq=False)
class Ball(ConvexSet):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _frozen(as_point(self.center)))
        r = float(self.radius)
        if not np.isfinite(r) or r < 0:
            raise ValueError(f"ball radius must be finite and >= 0, got {r}")
        object.__setattr__(self, "radius", r)

    @property
    def dim(self) -> int:
        return self.center.size

    def project(self, x) -> np.ndarray:
        x = as_point(x, self.dim)
        w = x - self.center
        n = norm(w)
        if n <= self.radius:
            return x
        return self.center + (self.radius / n) * w

    def project_many(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        W = X - self.center
        n = np.sqrt(np.sum(W * W, axis=1))
        out = X.copy()
        far = n > self.radius
        out[far] = self.center + (self.radius / n[far])[:, None] * W[far]
        return out

    def reflect_translate(self, shift) -> ConvexSet:
        return Ball(as_point(shift, self.dim) - self.center, self.radius)

    def to_dict(self):
        return {"kind": "ball", "center": self.center.tolist(), "radius": self.radius}


@dataclass(frozen=True, eq=False)
class Box(ConvexSet):
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = as_point(self.lower)
        hi = as_point(self.upper, lo.size)
        if np.any(lo > hi):
            raise InfeasibleSet(f"box bounds not ordered: {lo} > {hi}")
        object.__setattr__(self, "lower", _frozen(lo))
        object.__setattr__(self, "upper", _frozen(hi))

    @property
    def dim(self) -> int:
        return self.lower.size

    def project(self, x) -> np.ndarray:
        x = as_point(x, self.dim)
        return np.minimum(np.maximum(x, self.lower), self.upper)

    def project_many(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.minimum(np.maximum(X, self.lower), self.upper)

    def reflect_translate(self, shift) -> ConvexSet:
        s = as_point(shift, self.dim)
        return Box(s - self.upper, s - self.lower)

    def to_dict(self):
        return {"kind": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist()}


def interval(a: float, b: float) -> Box:
    """The closed interval [a, b] as a one-dimensional box."""
    return Box([a], [b])


@dataclass(frozen=True, eq=False)
class HalfSpace(ConvexSet):
    """``{x : <normal, x> <= offset}``."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = as_point(self.normal)
        if not np.any(n):
            raise ValueError("half-space normal must be nonzero")
        object.__setattr__(self, "normal", _frozen(n))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self) -> int:
        return self.normal.size

    def project(self, x) -> np.ndarray:
        x = as_point(x, self.dim)
        viol = float(self.normal @ x) - self.offset
        if viol <= 0:
            return x
        return x - (viol / float(self.normal @ self.normal)) * self.normal

    def project_many(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        viol = np.maximum(X @ self.normal - self.offset, 0.0)
        return X - (viol / float(self.normal @ self.normal))[:, None] * self.normal

    def reflect_translate(self, shift) -> ConvexSet:
        s = as_point(shift, self.dim)
        return HalfSpace(-self.normal, self.offset - float(self.normal @ s))

    def to_dict(self):
        return {"kind": "halfspace", "normal": self.normal.tolist(), "offset": self.offset}


@dataclass(frozen=True, eq=False)
class Polyhedron(ConvexSet):
    """Finite intersection of half-spaces, checked for feasibility on construction."""

    halfspaces: tuple[HalfSpace, ...]
    tol: float = field(default=TOL_PROJ, compare=False)
    max_iter: int = field(default=MAX_ITER, compare=False)

    def __post_init__(self):
        hs = tuple(h if isinstance(h, HalfSpace) else HalfSpace(*h) for h in self.halfspaces)
        if not hs:
            raise ValueError("polyhedron needs at least one half-space")
        d = hs[0].dim
        if any(h.dim != d for h in hs):
            raise DimensionMismatch("half-spaces of a polyhedron must share a dimension")
        object.__setattr__(self, "halfspaces", hs)
        self._check_feasible()

    @property
    def dim(self) -> int:
        return self.halfspaces[0].dim

    @cached_property
    def normals(self) -> np.ndarray:
        return _frozen(np.array([h.normal for h in self.halfspaces]))

    @cached_property
    def offsets(self) -> np.ndarray:
        return _frozen(np.array([h.offset for h in self.halfspaces]))

    def _check_feasible(self):
        from scipy.optimize import linprog

        res = linprog(
            np.zeros(self.dim),
            A_ub=self.normals,
            b_ub=self.offsets,
            bounds=[(None, None)] * self.dim,
            method="highs",
        )
        if res.status == 2:
            raise InfeasibleSet("polyhedron is empty")

    def project(self, x) -> np.ndarray:
        x = as_point(x, self.dim)
        p, it = kernels.dykstra_halfspaces(x, self.normals, self.offsets, self.tol, self.max_iter)
        if it < 0:
            raise NonConvergence(f"Dykstra did not reach tol={self.tol} in {self.max_iter} cycles")
        return x if it == 0 else p

    def reflect_translate(self, shift) -> ConvexSet:
        return Polyhedron(tuple(h.reflect_translate(shift) for h in self.halfspaces), self.tol, self.max_iter)

    def to_dict(self):
        return {
            "kind": "polyhedron",
            "halfspaces": [{"normal": h.normal.tolist(), "offset": h.offset} for h in self.halfspaces],
        }


@dataclass(frozen=True, eq=False)
class Translate(ConvexSet):
    """``{shift - z : z in base}``."""

    base: ConvexSet
    shift: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "shift", _frozen(as_point(self.shift, self.base.dim)))

    @property
    def dim(self) -> int:
        return self.base.dim

    def project(self, x) -> np.ndarray:
        x = as_point(x, self.dim)
        w = self.shift - x
        p = self.base.project(w)
        if p is w or np.array_equal(p, w):
            return x
        return self.shift - p

    def project_many(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        W = self.shift - X
        P = self.base.project_many(W)
        out = self.shift - P
        same = np.all(P == W, axis=1)
        out[same] = X[same]
        return out

    def simplify(self) -> ConvexSet:
        base = self.base.simplify()
        if isinstance(base, (Ball, Box, HalfSpace, Polyhedron)):
            return base.reflect_translate(self.shift)
        if isinstance(base, Dilation):
            return Dilation(Translate(base.base, self.shift).simplify(), base.radius)
        return Translate(base, self.shift)

    def to_dict(self):
        return {"kind": "translate", "base": self.base.to_dict(), "shift": self.shift.tolist()}


def project_dilation(base: ConvexSet, r: float, x) -> np.ndarray:
    """Projection onto ``base + D_r`` given the projection onto ``base``."""
    if r < 0:
        raise ValueError(f"dilation radius must be >= 0, got {r}")
    x = as_point(x, base.dim)
    p = base.project(x)
    w = x - p
    dist = norm(w)
    if dist <= r:
        return x
    return p + (r / dist) * w


@dataclass(frozen=True, eq=False)
class Dilation(ConvexSet):
    """Minkowski sum ``base + D_radius``."""

    base: ConvexSet
    radius: float

    def __post_init__(self):
        r = float(self.radius)
        if not np.isfinite(r) or r < 0:
            raise ValueError(f"dilation radius must be finite and >= 0, got {r}")
        object.__setattr__(self, "radius", r)

    @property
    def dim(self) -> int:
        return self.base.dim

    def project(self, x) -> np.ndarray:
        return project_dilation(self.base, self.radius, x)

    def simplify(self) -> ConvexSet:
        base = self.base.simplify()
        if self.radius == 0:
            return base
        if isinstance(base, Ball):
            return Ball(base.center, base.radius + self.radius)
        if isinstance(base, Dilation):
            return Dilation(base.base, base.radius + self.radius)
        return Dilation(base, self.radius)

    def to_dict(self):
        return {"kind": "dilation", "base": self.base.to_dict(), "radius": self.radius}


def _project_two_balls(b1: Ball, b2: Ball, x: np.ndarray) -> np.ndarray:
    """Exact projection onto the intersection of two balls."""
    if norm(x - b1.center) <= b1.radius and norm(x - b2.center) <= b2.radius:
        return x
    p1 = b1.project(x)
    if norm(p1 - b2.center) <= b2.radius + TOL_PROJ:
        return p1
    p2 = b2.project(x)
    if norm(p2 - b1.center) <= b1.radius + TOL_PROJ:
        return p2
    # the nearest point lies on both spheres: a (d-2)-sphere orthogonal to the axis
    axis = b2.center - b1.center
    D = norm(axis)
    if D == 0:
        raise InfeasibleSet("concentric balls with disjoint spheres")
    e = axis / D
    a = (D * D + b1.radius**2 - b2.radius**2) / (2 * D)
    if a > b1.radius + 1e-9 * max(1.0, D):
        raise InfeasibleSet("ball intersection is empty")
    rc = np.sqrt(max(b1.radius**2 - a * a, 0.0))
    c = b1.center + a * e
    w = x - c
    w_perp = w - (w @ e) * e
    n = norm(w_perp)
    if rc == 0.0:
        return c
    if n == 0.0:
        # every point of the circle is nearest; pick a deterministic one
        k = int(np.argmin(np.abs(e)))
        w_perp = np.zeros_like(e)
        w_perp[k] = 1.0
        w_perp -= (w_perp @ e) * e
        n = norm(w_perp)
    return c + (rc / n) * w_perp


@dataclass(frozen=True, eq=False)
class DilationIntersection(ConvexSet):
    """``(a + D_ra) ∩ (b + D_rb)``; the geodesic sets between two convex sets."""

    a: ConvexSet
    ra: float
    b: ConvexSet
    rb: float
    tol: float = field(default=TOL_PROJ, compare=False)
    max_iter: int = field(default=MAX_ITER, compare=False)

    def __post_init__(self):
        if self.a.dim != self.b.dim:
            raise DimensionMismatch("operands of an intersection must share a dimension")
        for r in (self.ra, self.rb):
            if r < 0:
                raise ValueError(f"dilation radius must be >= 0, got {r}")
        object.__setattr__(self, "ra", float(self.ra))
        object.__setattr__(self, "rb", float(self.rb))

    @property
    def dim(self) -> int:
        return self.a.dim

    @cached_property
    def _operands(self) -> tuple[ConvexSet, ConvexSet]:
        return Dilation(self.a, self.ra).simplify(), Dilation(self.b, self.rb).simplify()

    def project(self, x) -> np.ndarray:
        x = as_point(x, self.dim)
        A, B = self._operands
        if isinstance(A, Ball) and isinstance(B, Ball):
            return _project_two_balls(A, B, x)
        budget = min(self.max_iter, STALL_ITER)
        try:
            return dykstra(A, B, x, self.tol, budget)
        except NonConvergence as e:
            start = e.last
        # nearly tangent operands make Dykstra crawl; finish with a smooth solver
        try:
            return _polish_intersection(self, x, start)
        except NonConvergence:
            if budget == self.max_iter:
                raise
        return dykstra(A, B, x, self.tol, self.max_iter)

    def to_dict(self):
        return {
            "kind": "dilation_intersection",
            "a": self.a.to_dict(),
            "ra": self.ra,
            "b": self.b.to_dict(),
            "rb": self.rb,
        }


def dykstra(A: ConvexSet, B: ConvexSet, x, tol: float = TOL_PROJ, max_iter: int = MAX_ITER) -> np.ndarray:
    """Projection onto ``A ∩ B`` by Dykstra's alternating projections."""
    x = as_point(x, A.dim)
    pa = A.project(x)
    if norm(pa - x) == 0.0 and B.distance(x) == 0.0:
        return x
    # one of the single projections is often already feasible for the other set
    if B.distance(pa) <= tol:
        return pa
    pb = B.project(x)
    if A.distance(pb) <= tol:
        return pb
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    cur = x
    for _ in range(max_iter):
        y = A.project(cur + p)
        p = cur + p - y
        nxt = B.project(y + q)
        q = y + q - nxt
        if norm(nxt - cur) <= tol and norm(nxt - y) <= tol:
            return nxt
        cur = nxt
    err = NonConvergence(f"Dykstra did not reach tol={tol} in {max_iter} iterations")
    err.last = cur
    raise err


def _radius_constraint(base: ConvexSet, r: float) -> dict[str, Any]:
    # r - dist(y, base) >= 0 is a concave constraint with gradient -(y - P y)/dist
    def fun(y):
        return r - base.distance(y)

    def jac(y):
        w = y - base.project(y)
        d = norm(w)
        return -w / d if d > 0 else np.zeros_like(y)

    return {"type": "ineq", "fun": fun, "jac": jac}


def _polish_intersection(K: DilationIntersection, x: np.ndarray, start: np.ndarray) -> np.ndarray:
    """SLSQP on ``min |y - x|^2`` over the two radius constraints, from a Dykstra iterate."""
    from scipy.optimize import minimize

    # |y - x|^2 / (2D) - D/2 re-centred at ``start``: values stay O(|y - start|)
    D = max(norm(start - x), 1e-300)
    e = (start - x) / D
    res = minimize(
        lambda y: float(e @ (y - start)) + 0.5 * float(np.sum((y - start) ** 2)) / D,
        start,
        jac=lambda y: e + (y - start) / D,
        constraints=[_radius_constraint(K.a, K.ra), _radius_constraint(K.b, K.rb)],
        method="SLSQP",
        options={"ftol": 1e-16, "maxiter": 500},
    )
    y = res.x
    viol = max(K.a.distance(y) - K.ra, K.b.distance(y) - K.rb, 0.0)
    if not np.all(np.isfinite(y)) or viol > K.tol:
        raise NonConvergence(f"Dykstra stalled and the SLSQP polish left a violation of {viol:.3e}")
    return y


def project(K: ConvexSet, x) -> np.ndarray:
    return K.project(x)


def normal_cone_contains(K: ConvexSet, x, v, tol: float = 1e-9) -> bool:
    """Test ``v ∈ N_K(x)`` through ``N_K(x) = Proj_K^{-1}(x) - x``."""
    x = as_point(x, K.dim)
    v = as_point(v, K.dim)
    if K.distance(x) > tol:
        raise PointNotInSet(f"point is at distance {K.distance(x):.3e} from the set")
    return norm(K.project(x + v) - x) <= tol


def _box_hausdorff(A: Box, B: Box) -> float:
    du = A.upper - B.upper
    dl = A.lower - B.lower
    excess_ab = np.maximum(np.maximum(du, -dl), 0.0)
    excess_ba = np.maximum(np.maximum(-du, dl), 0.0)
    return max(norm(excess_ab), norm(excess_ba))


def hausdorff_distance(A: ConvexSet, B: ConvexSet) -> float:
    """Hausdorff distance for the pair classes that have an exact formula.

    Supported: reflected translates of a common base, pairs of balls, pairs
    of boxes, dilations of a common base, and identical sets.
    """
    if A.dim != B.dim:
        raise DimensionMismatch("sets live in different dimensions")
    if isinstance(A, Translate) and isinstance(B, Translate) and A.base == B.base:
        return norm(A.shift - B.shift)
    if A == B:
        return 0.0
    sa, sb = A.simplify(), B.simplify()
    if isinstance(sa, Translate) and isinstance(sb, Translate) and sa.base == sb.base:
        return norm(sa.shift - sb.shift)
    if isinstance(sa, Ball) and isinstance(sb, Ball):
        return norm(sa.center - sb.center) + abs(sa.radius - sb.radius)
    if isinstance(sa, Box) and isinstance(sb, Box):
        return _box_hausdorff(sa, sb)
    if isinstance(sa, Dilation) and isinstance(sb, Dilation) and sa.base == sb.base:
        return abs(sa.radius - sb.radius)
    if sa == sb:
        return 0.0
    raise UnsupportedPair(f"no exact Hausdorff formula for {type(A).__name__} vs {type(B).__name__}")


def geodesic_set(A: ConvexSet, B: ConvexSet, t: float) -> ConvexSet:
    """Point ``t`` of the geodesic ``(A + D_{t rho}) ∩ (B + D_{(1-t) rho})``."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"geodesic parameter must lie in [0, 1], got {t}")
    rho = hausdorff_distance(A, B)
    if rho == 0.0 or t == 0.0:
        return A
    if t == 1.0:
        return B
    return DilationIntersection(A, t * rho, B, (1.0 - t) * rho)


# ---------------------------------------------------------------- JSON

CONVEX_SET_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$id": "convex_set",
    "$defs": {
        "vec": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "halfspace_fields": {
            "type": "object",
            "required": ["normal", "offset"],
            "properties": {"normal": {"$ref": "#/$defs/vec"}, "offset": {"type": "number"}},
        },
    },
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {
            "enum": [
                "ball",
                "box",
                "halfspace",
                "polyhedron",
                "translate",
                "dilation",
                "dilation_intersection",
            ]
        }
    },
    "allOf": [
        {
            "if": {"properties": {"kind": {"const": "ball"}}},
            "then": {
                "required": ["center", "radius"],
                "properties": {"center": {"$ref": "#/$defs/vec"}, "radius": {"type": "number", "minimum": 0}},
            },
        },
        {
            "if": {"properties": {"kind": {"const": "box"}}},
            "then": {
                "required": ["lower", "upper"],
                "properties": {"lower": {"$ref": "#/$defs/vec"}, "upper": {"$ref": "#/$defs/vec"}},
            },
        },
        {
            "if": {"properties": {"kind": {"const": "halfspace"}}},
            "then": {"$ref": "#/$defs/halfspace_fields"},
        },
        {
            "if": {"properties": {"kind": {"const": "polyhedron"}}},
            "then": {
                "required": ["halfspaces"],
                "properties": {
                    "halfspaces": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/halfspace_fields"}}
                },
            },
        },
        {
            "if": {"properties": {"kind": {"const": "translate"}}},
            "then": {
                "required": ["base", "shift"],
                "properties": {"base": {"$ref": "#"}, "shift": {"$ref": "#/$defs/vec"}},
            },
        },
        {
            "if": {"properties": {"kind": {"const": "dilation"}}},
            "then": {
                "required": ["base", "radius"],
                "properties": {"base": {"$ref": "#"}, "radius": {"type": "number", "minimum": 0}},
            },
        },
        {
            "if": {"properties": {"kind": {"const": "dilation_intersection"}}},
            "then": {
                "required": ["a", "ra", "b", "rb"],
                "properties": {
                    "a": {"$ref": "#"},
                    "b": {"$ref": "#"},
                    "ra": {"type": "number", "minimum": 0},
                    "rb": {"type": "number", "minimum": 0},
                },
            },
        },
    ],
}


def convex_set_from_dict(data: dict[str, Any]) -> ConvexSet:
    """Build a set from its JSON form; dimensions are checked for consistency."""
    kind = data.get("kind")
    if kind == "ball":
        return Ball(data["center"], data["radius"])
    if kind == "box":
        lo, hi = data["lower"], data["upper"]
        if len(lo) != len(hi):
            raise DimensionMismatch("box lower/upper lengths differ")
        return Box(lo, hi)
    if kind == "halfspace":
        return HalfSpace(data["normal"], data["offset"])
    if kind == "polyhedron":
        return Polyhedron(tuple(HalfSpace(h["normal"], h["offset"]) for h in data["halfspaces"]))
    if kind == "translate":
        base = convex_set_from_dict(data["base"])
        return Translate(base, as_point(data["shift"], base.dim))
    if kind == "dilation":
        return Dilation(convex_set_from_dict(data["base"]), data["radius"])
    if kind == "dilation_intersection":
        return DilationIntersection(
            convex_set_from_dict(data["a"]), data["ra"], convex_set_from_dict(data["b"]), data["rb"]
        )
    raise ValueError(f"unknown convex set kind {kind!r}")
