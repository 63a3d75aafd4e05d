"""Arc-length reparametrization with jump filling.

For a point-valued path ``u`` the jumps are filled with segments: the
result ``u_tilde`` is Lipschitz with constant speed ``V(u)/T`` and ``u =
u_tilde ∘ ell_u``.  For the moving set ``C_u(t) = u(t) - Z`` the jumps are
filled with the dilation-intersection geodesics of :func:`geodesic_set`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bvpath import BVPath, NondecreasingMap, arc_length
from .geometry import ConvexSet, Translate, convex_set_from_dict, geodesic_set, hausdorff_distance

SETPATH_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$id": "set_path",
    "type": "object",
    "required": ["kind"],
    "oneOf": [
        {"properties": {"kind": {"const": "translate_path"}}, "required": ["u", "Z"]},
        {"properties": {"kind": {"const": "constant"}}, "required": ["K", "T"]},
    ],
}


class SetPath:
    """Right-continuous ``Conv``-valued path on ``[0, T]``."""

    T: float

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def at(self, t: float) -> ConvexSet:
        raise NotImplementedError

    def left_at(self, t: float) -> ConvexSet:
        return self.at(t)

    def jump_times(self) -> np.ndarray:
        return np.empty(0)

    def breakpoints(self) -> np.ndarray:
        """Times every solver grid must contain."""
        return np.array([0.0, self.T])


@dataclass(frozen=True, eq=False)
class ConstantSetPath(SetPath):
    K: ConvexSet
    T: float

    @property
    def dim(self):
        return self.K.dim

    def at(self, t):
        return self.K

    def to_dict(self):
        return {"kind": "constant", "K": self.K.to_dict(), "T": self.T}


@dataclass(frozen=True, eq=False)
class TranslatePath(SetPath):
    """``C_u(t) = u(t) - Z``."""

    u: BVPath
    Z: ConvexSet

    def __post_init__(self):
        if self.u.dim != self.Z.dim:
            raise ValueError(f"path in R^{self.u.dim} but set in R^{self.Z.dim}")

    @property
    def T(self):
        return self.u.T

    @property
    def dim(self):
        return self.Z.dim

    def at(self, t):
        return Translate(self.Z, self.u.eval(t))

    def left_at(self, t):
        return Translate(self.Z, self.u.left_limit(t))

    def jump_times(self):
        return self.u.jump_times()

    def breakpoints(self):
        return self.u.times

    def variation(self) -> float:
        return set_arc_length(self)[1]

    def to_dict(self):
        return {"kind": "translate_path", "u": self.u.to_dict(), "Z": self.Z.to_dict()}


@dataclass(frozen=True, eq=False)
class GeodesicPath(SetPath):
    """``t -> geodesic_set(A, B, t)`` on ``[0, 1]``."""

    A: ConvexSet
    B: ConvexSet
    T: float = 1.0

    @property
    def dim(self):
        return self.A.dim

    def at(self, t):
        return geodesic_set(self.A, self.B, min(max(t, 0.0), 1.0))


@dataclass(frozen=True, eq=False)
class FilledSetPath(SetPath):
    """Lipschitz set path: ``u_tilde(s) - Z`` off the gaps, geodesics on them.

    ``gaps`` holds ``(s0, s1, A, B)``: on ``]s0, s1[`` the path runs along the
    geodesic from ``A = C(t-)`` to ``B = C(t)``.
    """

    u_tilde: BVPath
    Z: ConvexSet
    gaps: tuple

    @property
    def T(self):
        return self.u_tilde.T

    @property
    def dim(self):
        return self.Z.dim

    def gap_at(self, s: float):
        for s0, s1, A, B in self.gaps:
            if s0 < s < s1:
                return s0, s1, A, B
        return None

    def at(self, s):
        g = self.gap_at(s)
        if g is None:
            return Translate(self.Z, self.u_tilde.eval(s))
        s0, s1, A, B = g
        return geodesic_set(A, B, (s - s0) / (s1 - s0))

    def breakpoints(self):
        return self.u_tilde.times


def set_path_from_dict(data: dict) -> SetPath:
    if data.get("kind") == "translate_path":
        return TranslatePath(BVPath.from_dict(data["u"]), convex_set_from_dict(data["Z"]))
    if data.get("kind") == "constant":
        return ConstantSetPath(convex_set_from_dict(data["K"]), float(data["T"]))
    raise ValueError(f"unknown set path kind {data.get('kind')!r}")


def _fill(u: BVPath, ell: NondecreasingMap) -> BVPath:
    """Lipschitz path ``u_tilde`` on ``[0, T]`` with ``u = u_tilde ∘ ell``, segments across jumps."""
    T = u.T
    if ell.upper == 0.0:
        return BVPath.constant(u.eval(0.0), T)
    sig_left, sig_right = ell.left[:, 0], ell.right[:, 0]
    pts_s = [sig_right[0]]
    pts_v = [u.right[0]]
    for i in range(1, u.n_nodes):
        pts_s += [sig_left[i], sig_right[i]]
        pts_v += [u.left[i], u.right[i]]
    times, left, right = [], [], []
    for s, v in zip(pts_s, pts_v):
        if times and s == times[-1]:
            right[-1] = v
        else:
            times.append(s)
            left.append(v)
            right.append(v)
    return BVPath(times, left, right)


def fill_segments(u: BVPath) -> tuple[NondecreasingMap, BVPath]:
    """``(ell_u, u_tilde)``: arc length and its segment-filled inverse reparametrization."""
    ell = arc_length(u)
    return ell, _fill(u, ell)


def set_arc_length(C: TranslatePath) -> tuple[NondecreasingMap, float]:
    """Arc length of a translate path computed from Hausdorff distances alone."""
    u = C.u
    m = u.n_nodes
    contrib = np.zeros(2 * m - 1)
    for i in range(m):
        if i > 0:
            contrib[2 * i - 1] = hausdorff_distance(Translate(C.Z, u.right[i - 1]), Translate(C.Z, u.left[i]))
        contrib[2 * i] = hausdorff_distance(Translate(C.Z, u.left[i]), Translate(C.Z, u.right[i]))
    cs = np.cumsum(contrib)
    w_right = cs[0::2]
    w_left = np.concatenate([[0.0], cs[1::2]])
    V = float(w_right[-1])
    T = u.T
    if V == 0.0:
        z = np.zeros(m)
        return NondecreasingMap(u.times, z, z), 0.0
    return NondecreasingMap(u.times, T * (w_left / V), T * (w_right / V)), V


def fill_geodesics(C: SetPath) -> tuple[NondecreasingMap, SetPath]:
    """``(ell_C, C_tilde)`` with geodesic filling across the jumps of ``C``."""
    if isinstance(C, ConstantSetPath):
        return NondecreasingMap([0.0, C.T], [0.0, 0.0]), C
    if not isinstance(C, TranslatePath):
        raise TypeError("geodesic filling is implemented for translate paths u(t) - Z")
    ell, _ = set_arc_length(C)
    u = C.u
    u_tilde = _fill(u, ell)
    gaps = []
    sl, sr = ell.left[:, 0], ell.right[:, 0]
    for i in range(1, u.n_nodes):
        if sr[i] > sl[i]:
            gaps.append((float(sl[i]), float(sr[i]), Translate(C.Z, u.left[i]), Translate(C.Z, u.right[i])))
    return ell, FilledSetPath(u_tilde, C.Z, tuple(gaps))


def constant_speed_check(u_tilde: BVPath, V: float, T: float) -> float:
    """Largest deviation of a segment speed of ``u_tilde`` from ``V / T``.

    Zero-length segments (constancy stretches) are skipped.
    """
    lengths = u_tilde.segment_lengths()
    dt = np.diff(u_tilde.times)
    moving = lengths > 0
    if not np.any(moving):
        return 0.0
    return float(np.max(np.abs(lengths[moving] / dt[moving] - V / T)))
