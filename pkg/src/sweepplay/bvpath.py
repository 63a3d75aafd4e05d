"""Right-continuous piecewise-linear paths with finitely many jumps.

A :class:`BVPath` on ``[0, T]`` is stored by its nodes ``0 = t_0 < ... < t_m
= T`` together with the left limit ``f(t_i-)`` and the value ``f(t_i) =
f(t_i+)`` at every node.  Between two nodes the path is affine, from
``f(t_i)`` to ``f(t_{i+1}-)``.  ``f(0-) := f(0)`` by convention.

On this class every quantity used by the solvers (pointwise variation,
normalised arc length, uniform / strict / BV distances, Lebesgue-Stieltjes
measures of intervals, composition with nondecreasing maps) is computed
exactly from the node data, with no sampling.
"""

from __future__ import annotations

import csv
import io
from typing import Any, Iterable

import numpy as np

from .errors import DimensionMismatch, HorizonMismatch, OutOfDomain, RangeMismatch

TIME_TOL = 1e-12

BVPATH_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$id": "bvpath",
    "type": "object",
    "required": ["T", "nodes"],
    "properties": {
        "T": {"type": "number", "exclusiveMinimum": 0},
        "nodes": {
            "type": "array",
            "minItems": 2,
            "items": {
                "type": "object",
                "required": ["t", "right"],
                "properties": {
                    "t": {"type": "number"},
                    "left": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                    "right": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                },
            },
        },
    },
}


def _row_norms(a: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(a * a, axis=1))


def _as_rows(values, n: int | None = None) -> np.ndarray:
    a = np.array(values, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise DimensionMismatch(f"expected an (n, d) array of values, got shape {a.shape}")
    if n is not None and a.shape[0] != n:
        raise DimensionMismatch(f"expected {n} rows of values, got {a.shape[0]}")
    return a


class BVPath:
    """Right-continuous BV path ``[0, T] -> R^d`` (piecewise linear with jumps)."""

    def __init__(self, times, left, right=None):
        t = np.array(times, dtype=float).reshape(-1)
        if t.size < 2:
            raise ValueError("a path needs at least the two nodes 0 and T")
        if t[0] != 0.0:
            raise ValueError(f"first node must be 0, got {t[0]}")
        if np.any(np.diff(t) <= 0):
            raise ValueError("node times must be strictly increasing")
        L = _as_rows(left, t.size)
        R = L.copy() if right is None else _as_rows(right, t.size)
        if R.shape != L.shape:
            raise DimensionMismatch("left and right values must have the same shape")
        if not (np.all(np.isfinite(L)) and np.all(np.isfinite(R))):
            raise ValueError("path values must be finite")
        L = L.copy()
        L[0] = R[0]
        for a in (t, L, R):
            a.setflags(write=False)
        self._t, self._L, self._R = t, L, R

    # ------------------------------------------------------------ basics

    @classmethod
    def continuous(cls, times, values) -> BVPath:
        return cls(times, values)

    @classmethod
    def constant(cls, value, T: float) -> BVPath:
        v = np.atleast_1d(np.asarray(value, dtype=float))
        return cls([0.0, T], np.vstack([v, v]))

    @property
    def times(self) -> np.ndarray:
        return self._t

    @property
    def left(self) -> np.ndarray:
        return self._L

    @property
    def right(self) -> np.ndarray:
        return self._R

    @property
    def T(self) -> float:
        return float(self._t[-1])

    @property
    def dim(self) -> int:
        return self._R.shape[1]

    @property
    def n_nodes(self) -> int:
        return self._t.size

    def __repr__(self):
        return f"{type(self).__name__}(T={self.T}, dim={self.dim}, nodes={self.n_nodes})"

    def __eq__(self, other):
        if not isinstance(other, BVPath):
            return NotImplemented
        return (
            np.array_equal(self._t, other._t)
            and np.array_equal(self._L, other._L)
            and np.array_equal(self._R, other._R)
        )

    __hash__ = None

    # -------------------------------------------------------- evaluation

    def _check_domain(self, ts: np.ndarray) -> np.ndarray:
        T = self.T
        slack = TIME_TOL * max(1.0, T)
        if np.any(ts < -slack) or np.any(ts > T + slack):
            bad = ts[(ts < -slack) | (ts > T + slack)][0]
            raise OutOfDomain(f"time {bad} outside [0, {T}]")
        return np.clip(ts, 0.0, T)

    def eval_many(self, ts) -> np.ndarray:
        """Values ``f(t) = f(t+)`` at each time of ``ts``; shape ``(len(ts), d)``."""
        ts = self._check_domain(np.asarray(ts, dtype=float).reshape(-1))
        t = self._t
        idx = np.clip(np.searchsorted(t, ts, side="right") - 1, 0, t.size - 1)
        out = self._R[idx].copy()
        mid = ts != t[idx]
        if np.any(mid):
            i = idx[mid]
            frac = ((ts[mid] - t[i]) / (t[i + 1] - t[i]))[:, None]
            out[mid] = self._R[i] + frac * (self._L[i + 1] - self._R[i])
        return out

    def left_many(self, ts) -> np.ndarray:
        """Left limits ``f(t-)`` (with ``f(0-) = f(0)``)."""
        ts = self._check_domain(np.asarray(ts, dtype=float).reshape(-1))
        out = self.eval_many(ts)
        k = np.clip(np.searchsorted(self._t, ts, side="left"), 0, self._t.size - 1)
        node = self._t[k] == ts
        out[node] = self._L[k[node]]
        return out

    def eval(self, t: float) -> np.ndarray:
        return self.eval_many([t])[0]

    def left_limit(self, t: float) -> np.ndarray:
        return self.left_many([t])[0]

    __call__ = eval

    # ---------------------------------------------------- jumps, lengths

    def jump_sizes(self) -> np.ndarray:
        return _row_norms(self._R - self._L)

    def jump_times(self) -> np.ndarray:
        return self._t[self.jump_sizes() > 0]

    @property
    def is_continuous(self) -> bool:
        return bool(np.all(self._R == self._L))

    def segment_lengths(self) -> np.ndarray:
        return _row_norms(self._L[1:] - self._R[:-1])

    def cumulative_variation(self) -> tuple[np.ndarray, np.ndarray]:
        """``(V(f,[0,t_i]) - |jump_i|, V(f,[0,t_i]))`` at every node.

        The contributions are summed in path order, alternating jump and
        segment, so paths sharing those lengths get bitwise equal totals.
        """
        m = self._t.size
        contrib = np.zeros(2 * m - 1)
        contrib[0::2] = self.jump_sizes()
        contrib[1::2] = self.segment_lengths()
        cs = np.cumsum(contrib)
        w_right = cs[0::2]
        w_left = np.empty(m)
        w_left[0] = 0.0
        w_left[1:] = cs[1::2]
        return w_left, w_right

    def _w(self, ts: np.ndarray) -> np.ndarray:
        t = self._t
        w_left, w_right = self.cumulative_variation()
        idx = np.clip(np.searchsorted(t, ts, side="right") - 1, 0, t.size - 1)
        out = w_right[idx].copy()
        mid = ts != t[idx]
        if np.any(mid):
            i = idx[mid]
            frac = (ts[mid] - t[i]) / (t[i + 1] - t[i])
            out[mid] += frac * (w_left[i + 1] - w_right[i])
        return out

    def variation(self, s: float = 0.0, t: float | None = None) -> float:
        """Pointwise variation ``V(f, [s, t])`` (whole horizon by default)."""
        if t is None:
            t = self.T
        if s > t:
            raise OutOfDomain(f"empty interval [{s}, {t}]")
        st = self._check_domain(np.array([s, t], dtype=float))
        if st[0] == 0.0 and st[1] == self.T:
            return float(self.cumulative_variation()[1][-1])
        w = self._w(st)
        return float(w[1] - w[0])

    # ----------------------------------------------------- restructuring

    def refine(self, extra_times: Iterable[float]) -> BVPath:
        """Same path with additional (trivial) nodes."""
        extra = self._check_domain(np.asarray(list(extra_times), dtype=float).reshape(-1))
        times = np.union1d(self._t, extra)
        if times.size == self._t.size:
            return self
        return type(self)(times, self.left_many(times), self.eval_many(times))

    def _aligned(self, other: BVPath) -> tuple[BVPath, BVPath]:
        if self.dim != other.dim:
            raise DimensionMismatch(f"dimensions differ: {self.dim} vs {other.dim}")
        if abs(self.T - other.T) > TIME_TOL * max(1.0, self.T):
            raise HorizonMismatch(f"horizons differ: {self.T} vs {other.T}")
        if np.array_equal(self._t, other._t):
            return self, other
        a = self.refine(other._t[1:-1])
        b = other.refine(a._t[1:-1])
        return a, b

    def __add__(self, other):
        if isinstance(other, BVPath):
            a, b = self._aligned(other)
            return BVPath(a._t, a._L + b._L, a._R + b._R)
        v = np.asarray(other, dtype=float)
        return BVPath(self._t, self._L + v, self._R + v)

    __radd__ = __add__

    def __neg__(self):
        return BVPath(self._t, -self._L, -self._R)

    def __sub__(self, other):
        if isinstance(other, BVPath):
            a, b = self._aligned(other)
            return BVPath(a._t, a._L - b._L, a._R - b._R)
        v = np.asarray(other, dtype=float)
        return BVPath(self._t, self._L - v, self._R - v)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, c):
        c = float(c)
        return BVPath(self._t, c * self._L, c * self._R)

    __rmul__ = __mul__

    def restrict(self, T_new: float) -> BVPath:
        """Restriction to ``[0, T_new]``."""
        if not 0 < T_new <= self.T:
            raise OutOfDomain(f"cannot restrict to [0, {T_new}]")
        keep = self._t < T_new
        times = np.append(self._t[keep], T_new)
        left = np.vstack([self._L[keep], self.left_limit(T_new)])
        right = np.vstack([self._R[keep], self.eval(T_new)])
        return BVPath(times, left, right)

    # ------------------------------------------------------------ export

    def to_dict(self) -> dict[str, Any]:
        return {
            "T": self.T,
            "nodes": [
                {"t": float(t), "left": list(map(float, l)), "right": list(map(float, r))}
                for t, l, r in zip(self._t, self._L, self._R)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]):
        nodes = data["nodes"]
        times = [n["t"] for n in nodes]
        right = [n["right"] for n in nodes]
        left = [n.get("left", n["right"]) for n in nodes]
        dims = {len(v) for v in right} | {len(v) for v in left}
        if len(dims) != 1:
            raise DimensionMismatch(f"node values have inconsistent dimensions {sorted(dims)}")
        path = cls(times, left, right)
        if abs(path.T - float(data["T"])) > TIME_TOL * max(1.0, path.T):
            raise HorizonMismatch(f"last node {path.T} does not match T={data['T']}")
        return path

    def to_csv(self, fh=None, grid=None) -> str | None:
        """Write rows ``t, f_1, ..., f_d``; jump times get a left row then a right row.

        The grid defaults to the nodes, in which case :meth:`from_csv` restores
        the path exactly.  Returns the text when ``fh`` is None.
        """
        times = self._t if grid is None else np.union1d(np.asarray(grid, dtype=float), self.jump_times())
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + [f"f{i + 1}" for i in range(self.dim)])
        right = self.eval_many(times)
        left = self.left_many(times)
        for t, l, r in zip(times, left, right):
            if np.any(l != r):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in l])
            w.writerow([repr(float(t))] + [repr(float(v)) for v in r])
        if fh is None:
            return buf.getvalue()
        return None

    @classmethod
    def from_csv(cls, fh):
        if isinstance(fh, str):
            fh = io.StringIO(fh)
        rows = [r for r in csv.reader(fh) if r]
        data = [[float(v) for v in r] for r in rows[1:]]
        times, left, right = [], [], []
        for row in data:
            t, vals = row[0], row[1:]
            if times and t == times[-1]:
                right[-1] = vals
            else:
                times.append(t)
                left.append(vals)
                right.append(vals)
        return cls(times, left, right)


class NondecreasingMap(BVPath):
    """Scalar nondecreasing right-continuous map ``[0, T] -> [0, upper]``."""

    def __init__(self, times, left, right=None):
        super().__init__(times, left, right)
        if self.dim != 1:
            raise DimensionMismatch("a nondecreasing map is scalar valued")
        L, R = self._L[:, 0], self._R[:, 0]
        scale = TIME_TOL * max(1.0, float(np.max(np.abs(R))))
        if np.any(R < L - scale) or np.any(L[1:] < R[:-1] - scale):
            raise ValueError("map is not nondecreasing")
        if np.any(R < -scale):
            raise RangeMismatch("map takes negative values")

    @classmethod
    def identity(cls, T: float) -> NondecreasingMap:
        return cls([0.0, T], [0.0, T])

    @classmethod
    def from_function(cls, func, T: float, n: int) -> NondecreasingMap:
        """Piecewise-linear interpolant of a continuous nondecreasing ``func`` on ``n`` cells."""
        times = np.linspace(0.0, T, n + 1)
        vals = np.array([func(t) for t in times], dtype=float)
        vals = np.maximum.accumulate(vals)
        return cls(times, vals)

    def value(self, t: float) -> float:
        return float(self.eval(t)[0])

    @property
    def upper(self) -> float:
        return float(self._R[-1, 0])


# ---------------------------------------------------------------- metrics


def d_inf(f: BVPath, g: BVPath) -> float:
    """``sup_t |f(t) - g(t)|``; exact since the norm of an affine map is convex."""
    diff = f - g
    return float(max(_row_norms(diff.left).max(), _row_norms(diff.right).max()))


def d_us(f: BVPath, g: BVPath) -> float:
    """Uniform strict distance ``d_inf(f, g) + |V(f) - V(g)|``."""
    return d_inf(f, g) + abs(f.variation() - g.variation())


def bv_norm(f: BVPath) -> float:
    return float(max(_row_norms(f.left).max(), _row_norms(f.right).max())) + f.variation()


def bv_norm_dist(f: BVPath, g: BVPath) -> float:
    """``||f - g||_inf + V(f - g, [0, T])``."""
    return bv_norm(f - g)


def stieltjes(f: BVPath, c: float, d: float, kind: str = "(]") -> np.ndarray:
    """Lebesgue-Stieltjes measure of the interval from ``c`` to ``d``.

    ``kind`` is one of ``"(]"``, ``"[]"``, ``"[)"``, ``"()"``.
    """
    if kind not in ("(]", "[]", "[)", "()"):
        raise ValueError(f"unknown interval kind {kind!r}")
    if c > d:
        raise OutOfDomain(f"empty interval with c={c} > d={d}")
    if c == d and kind != "[]":
        return np.zeros(f.dim)
    upper = f.eval(d) if kind[1] == "]" else f.left_limit(d)
    lower = f.left_limit(c) if kind[0] == "[" else f.eval(c)
    return upper - lower


# ------------------------------------------------------------ arc length


def arc_length(f: BVPath) -> NondecreasingMap:
    """Normalised arc length ``t -> T V(f,[0,t]) / V(f,[0,T])`` (``0`` if V = 0)."""
    w_left, w_right = f.cumulative_variation()
    V = w_right[-1]
    T = f.T
    if V == 0.0:
        z = np.zeros(f.n_nodes)
        return NondecreasingMap(f.times, z, z)
    return NondecreasingMap(f.times, T * (w_left / V), T * (w_right / V))


# ----------------------------------------------------------- composition


def _snap(x: float, nodes: np.ndarray, tol: float) -> float:
    k = int(np.clip(np.searchsorted(nodes, x), 0, nodes.size - 1))
    for j in (k - 1, k):
        if 0 <= j < nodes.size and abs(nodes[j] - x) <= tol:
            return float(nodes[j])
    return float(x)


def compose(f: BVPath, h: NondecreasingMap, tol: float = TIME_TOL) -> BVPath:
    """``f ∘ h`` on the domain of ``h``.

    Nodes are those of ``h`` plus the preimages of the nodes of ``f`` lying
    strictly inside the increasing segments of ``h``; node times of ``f``
    closer than ``tol`` (relative) to a value of ``h`` are treated as equal.
    """
    if not isinstance(h, NondecreasingMap):
        h = NondecreasingMap(h.times, h.left, h.right)
    Tf = f.T
    slack = tol * max(1.0, Tf)
    hl, hr = h.left[:, 0], h.right[:, 0]
    if hl.min() < -slack or hr.max() > Tf + slack:
        raise RangeMismatch(f"range of the inner map leaves [0, {Tf}]")
    hl = np.clip(hl, 0.0, Tf)
    hr = np.clip(hr, 0.0, Tf)
    ft = f.times
    ht = h.times

    times: list[np.ndarray] = []
    lefts: list[np.ndarray] = []
    rights: list[np.ndarray] = []
    for i in range(ht.size):
        r_i = _snap(hr[i], ft, slack)
        right = f.eval(r_i)
        if i == 0:
            left = right
        else:
            a = _snap(hr[i - 1], ft, slack)
            b = _snap(hl[i], ft, slack)
            left = f.left_limit(b) if b > a else f.eval(b)
        times.append(np.array([ht[i]]))
        lefts.append(left[None, :])
        rights.append(right[None, :])
        if i + 1 < ht.size:
            a, b = r_i, _snap(hl[i + 1], ft, slack)
            if b > a:
                k0 = np.searchsorted(ft, a, side="right")
                k1 = np.searchsorted(ft, b, side="left")
                if k1 > k0:
                    taus = ft[k0:k1]
                    # raw segment ends keep preimages independent of the outer path's nodes
                    lo, hi = hr[i], hl[i + 1]
                    s = ht[i] + (taus - lo) / (hi - lo) * (ht[i + 1] - ht[i])
                    ok = (s > ht[i]) & (s < ht[i + 1])
                    ok[1:] &= np.diff(s) > 0
                    times.append(s[ok])
                    lefts.append(f.left[k0:k1][ok])
                    rights.append(f.right[k0:k1][ok])
    cls = NondecreasingMap if isinstance(f, NondecreasingMap) else BVPath
    return cls(np.concatenate(times), np.vstack(lefts), np.vstack(rights))
