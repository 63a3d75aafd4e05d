"""Command-line experiment runner.

Subcommands::

    sweepplay solve --config request.json --out DIR [--h H] [--method direct|reparam|both]
    sweepplay corpus [--config DIR] --out DIR [--h H] [--seed S]
    sweepplay bv-continuity [--config experiment.json] --out DIR [--h H] [--seed S]
    sweepplay describe-schemas [--out DIR]
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .bvpath import BVPATH_SCHEMA, BVPath, NondecreasingMap, bv_norm, bv_norm_dist, d_inf, d_us
from .errors import ConfigError, SweepError
from .geometry import CONVEX_SET_SCHEMA, Ball, ConvexSet, as_point, convex_set_from_dict
from .reparam import SETPATH_SCHEMA, TranslatePath
from .solver import Grid, SweepOutput, play, play_via_reparam
from .verify import (
    CheckResult,
    check_normal_cone,
    check_rate_independence,
    check_sq_identities,
    corrupt,
    verify_solution,
)

log = logging.getLogger("sweepplay")

DEFAULT_H = 1e-3
RICHARDSON_BAND = (1.4, 2.6)
# d_inf differences below this are rounding noise; no ratio is formed from them
RICHARDSON_FLOOR = 1e-9
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
FAMILIES = ["shift", "amplitude", "jump_size", "reshape", "wiggles", "staircase"]

SOLVE_REQUEST_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$id": "solve_request",
    "type": "object",
    "required": ["Z", "z0", "u"],
    "properties": {
        "name": {"type": "string"},
        "Z": {"type": "object"},
        "z0": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "u": {"type": "object"},
        "grid": {
            "oneOf": [
                {
                    "type": "object",
                    "required": ["h"],
                    "properties": {"h": {"type": "number", "exclusiveMinimum": 0}},
                    "additionalProperties": False,
                },
                {
                    "type": "object",
                    "required": ["times"],
                    "properties": {"times": {"type": "array", "items": {"type": "number"}, "minItems": 2}},
                    "additionalProperties": False,
                },
            ]
        },
        "method": {"enum": ["direct", "reparam", "both"]},
    },
}

EXPERIMENT_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$id": "bv_continuity",
    "type": "object",
    "properties": {
        "Z": {"type": "object"},
        "z0": {"type": "array", "items": {"type": "number"}},
        "u": {"type": "object"},
        "ns": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 2},
        "families": {
            "type": "array",
            "items": {"enum": FAMILIES},
        },
        "h": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer"},
    },
}


# ------------------------------------------------------------ requests


@dataclass
class SolveRequest:
    name: str
    Z: ConvexSet
    z0: np.ndarray
    u: BVPath
    grid_spec: dict[str, Any]
    method: str

    def grid(self, h: float | None = None) -> Grid:
        if h is not None:
            return Grid.for_path(self.u, h)
        if "times" in self.grid_spec:
            return Grid(np.union1d(self.grid_spec["times"], self.u.times))
        return Grid.for_path(self.u, float(self.grid_spec.get("h", DEFAULT_H)))


def _where(err: jsonschema.ValidationError, prefix: str = "$") -> str:
    return prefix + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)


def _validate(data: Any, schema: dict[str, Any], prefix: str):
    err = jsonschema.exceptions.best_match(jsonschema.Draft202012Validator(schema).iter_errors(data))
    if err is not None:
        raise ConfigError(f"{_where(err, prefix)}: {err.message}")


def load_json(path: str | Path) -> Any:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from None


def parse_request(data: dict[str, Any], name: str = "request") -> SolveRequest:
    _validate(data, SOLVE_REQUEST_SCHEMA, "$")
    _validate(data["Z"], CONVEX_SET_SCHEMA, "$.Z")
    _validate(data["u"], BVPATH_SCHEMA, "$.u")
    try:
        Z = convex_set_from_dict(data["Z"])
        u = BVPath.from_dict(data["u"])
        z0 = as_point(data["z0"], Z.dim)
    except (SweepError, ValueError) as e:
        raise ConfigError(f"{name}: {e}") from None
    if u.dim != Z.dim:
        raise ConfigError(f"{name}: input lives in R^{u.dim} but Z in R^{Z.dim}")
    return SolveRequest(data.get("name", name), Z, z0, u, data.get("grid", {}), data.get("method", "direct"))


def load_request(path: str | Path) -> SolveRequest:
    return parse_request(load_json(path), Path(path).stem)


def corpus_paths(directory: str | Path | None = None) -> list[Path]:
    if directory is None:
        root = resources.files("sweepplay") / "corpus"
        return sorted(Path(str(p)) for p in root.iterdir() if p.name.endswith(".json"))
    return sorted(Path(directory).glob("*.json"))


def load_corpus(directory: str | Path | None = None) -> list[SolveRequest]:
    return [load_request(p) for p in corpus_paths(directory)]


def _dump(obj: Any, path: Path):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------- solve


def run_methods(req: SolveRequest, grid: Grid, method: str) -> dict[str, SweepOutput]:
    methods = ["direct", "reparam"] if method == "both" else [method]
    out = {}
    for m in methods:
        fn = play if m == "direct" else play_via_reparam
        out[m] = fn(req.z0, req.u, req.Z, grid)
    return out


def cmd_solve(args) -> int:
    req = load_request(args.config)
    method = args.method or req.method
    grid = req.grid(args.h)
    h = grid.h
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    outputs = run_methods(req, grid, method)
    report: list[dict[str, Any]] = []
    for m, out in outputs.items():
        (outdir / f"trajectory_{m}.csv").write_text(out.trajectory.to_csv())
        _dump(out.to_dict(), outdir / f"output_{m}.json")
        for c in verify_solution(req.z0, req.u, req.Z, out, h, args.seed):
            report.append({"method": m, **c.to_dict()})
    if len(outputs) == 2:
        gap = d_inf(outputs["direct"].trajectory, outputs["reparam"].trajectory)
        report.append({"method": "both", **CheckResult("pipeline_equivalence", gap, 10 * h, gap <= 10 * h, h).to_dict()})
    _dump({"name": req.name, "checks": report}, outdir / "report.json")
    failed = [r["name"] for r in report if not r["passed"]]
    print(f"{req.name}: {len(report) - len(failed)}/{len(report)} checks passed" + (f"; failed {failed}" if failed else ""))
    return 1 if failed else 0


# --------------------------------------------------------------- corpus


def richardson_ratio(req: SolveRequest, h: float, offsets: int = 64) -> float | None:
    """``D(h) / D(h/2)`` with ``D(k)`` the mean of ``d_inf(y_k, y_{k/2})`` over base steps ``k (1 + f_j)``.

    Errors born at contact onsets scale with the position of the onset inside
    its cell, so single-grid ratios scatter; averaging over many grid offsets
    removes that alignment noise.  The fractions ``f_j = frac(j / golden ratio)``
    spread evenly over ``[0, 1)`` for any count.  None when the differences
    are at rounding level.
    """
    fractions = np.mod(np.arange(offsets) * GOLDEN, 1.0)

    def mean_gap(k: float) -> float:
        gaps = []
        for f in fractions:
            kj = k * (1 + f)
            y0 = play(req.z0, req.u, req.Z, Grid.for_path(req.u, kj), residuals=False).trajectory
            y1 = play(req.z0, req.u, req.Z, Grid.for_path(req.u, kj / 2), residuals=False).trajectory
            gaps.append(d_inf(y0, y1))
        return float(np.mean(gaps))

    d1, d2 = mean_gap(h), mean_gap(h / 2)
    if d1 <= RICHARDSON_FLOOR or d2 <= RICHARDSON_FLOOR:
        return None
    return d1 / d2


def time_changes(T: float) -> dict[str, NondecreasingMap]:
    """Continuous onto time changes used by the rate-independence checks."""
    return {
        "square": NondecreasingMap.from_function(lambda t: t * t / T, T, 512),
        "piecewise_linear": NondecreasingMap(
            np.array([0.0, T / 4, T / 2, T]), np.array([[0.0], [T / 2], [0.6 * T], [T]])
        ),
        "cube_rescaled": NondecreasingMap.from_function(lambda s: T * (s / (1.5 * T)) ** 3, 1.5 * T, 512),
    }


def verify_item(req: SolveRequest, h: float, seed: int = 0, richardson_h: float | None = None) -> dict[str, Any]:
    grid = Grid.for_path(req.u, h)
    outs = run_methods(req, grid, "both")
    checks: list[CheckResult] = []
    for m, out in outs.items():
        for c in verify_solution(req.z0, req.u, req.Z, out, h, seed):
            c.name = f"{m}:{c.name}"
            checks.append(c)
    gap = d_inf(outs["direct"].trajectory, outs["reparam"].trajectory)
    checks.append(CheckResult("pipeline_equivalence", gap, 10 * h, gap <= 10 * h, h))
    bad = check_normal_cone(TranslatePath(req.u, req.Z), corrupt(outs["direct"], seed))
    # negative control passes when the corruption is detected
    checks.append(CheckResult("negative_control_detected", float(bad), 1.0, bad >= 1, h))
    for gname, gamma in time_changes(req.u.T).items():
        ri = check_rate_independence(req.z0, req.u, req.Z, gamma, h)
        checks.append(CheckResult(f"rate_independence:{gname}", ri, 10 * h, ri <= 10 * h, h))
    if req.u.is_continuous:
        orth, speed = check_sq_identities(req.z0, req.u, req.Z, grid)
        checks.append(CheckResult("sq_orthogonality", orth, float("inf"), True, h))
        checks.append(CheckResult("sq_speed", speed, float("inf"), True, h))
    ratio = richardson_ratio(req, richardson_h or 4 * h)
    lo, hi = RICHARDSON_BAND
    return {
        "name": req.name,
        "h": h,
        "checks": [c.to_dict() for c in checks],
        "richardson_ratio": ratio,
        "richardson_ok": ratio is None or lo <= ratio <= hi,
        "passed": all(c.passed for c in checks) and (ratio is None or lo <= ratio <= hi),
    }


def cmd_corpus(args) -> int:
    h = args.h or DEFAULT_H
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    items = []
    for path in corpus_paths(args.config):
        try:
            item = verify_item(load_request(path), h, args.seed)
        except (SweepError, OSError) as e:
            item = {"name": path.stem, "error": str(e), "passed": False}
        items.append(item)
        status = "ok" if item["passed"] else "FAIL"
        ratio = item.get("richardson_ratio")
        print(f"{item['name']:<22} {status}" + (f"  richardson={ratio:.3f}" if ratio is not None else ""))
    _dump({"h": h, "items": items}, outdir / "corpus_report.json")
    return 0 if all(i["passed"] for i in items) else 1


# -------------------------------------------------------- BV continuity


def default_experiment() -> dict[str, Any]:
    """Planar ball characteristic, input with a corner and a jump."""
    u = BVPath(
        [0.0, 1.0, 1.5, 2.5, 3.0],
        [[0.0, 0.0], [2.0, 0.5], [1.5, 1.5], [-0.5, 1.0], [0.0, -1.0]],
        [[0.0, 0.0], [2.0, 0.5], [0.5, 2.0], [-0.5, 1.0], [0.0, -1.0]],
    )
    return {
        "Z": Ball([0.0, 0.0], 1.0).to_dict(),
        "z0": [0.0, 0.0],
        "u": u.to_dict(),
        "ns": [1, 2, 4, 8, 16, 32],
        "families": list(FAMILIES),
    }


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _hat(T: float, a: float, b: float, direction: np.ndarray, height: float) -> BVPath:
    m = 0.5 * (a + b)
    times = sorted({0.0, a, m, b, T})
    vals = [direction * (height if t == m else 0.0) for t in times]
    return BVPath(times, vals)


def _zigzag(T: float, a: float, b: float, direction: np.ndarray, amp: float, teeth: int) -> BVPath:
    inner = np.linspace(a, b, 2 * teeth + 1)
    times = np.unique(np.concatenate([[0.0], inner, [T]]))
    vals = [direction * (amp if t in inner[1::2] else 0.0) for t in times]
    return BVPath(times, vals)


def _continuous_stretch(u: BVPath) -> tuple[float, float]:
    """Longest node interval of ``u``; the path is affine and jump-free inside it."""
    k = int(np.argmax(np.diff(u.times)))
    return float(u.times[k]), float(u.times[k + 1])


def perturbation(u: BVPath, family: str, n: int, rng: np.random.Generator) -> BVPath:
    """``u_n`` with ``||u_n - u||_BV = 1/n`` for every family except ``staircase``.

    ``staircase`` samples ``u`` on ``4n`` equal cells as a step function; it
    converges in the uniform-strict sense only and serves as the contrast case.
    """
    T, d = u.T, u.dim
    e = _unit(rng.standard_normal(d))
    if family == "shift":
        return u + BVPath.constant(e / n, T)
    if family == "amplitude":
        return u * (1.0 + 1.0 / (n * bv_norm(u)))
    if family == "jump_size":
        jt = u.jump_times()
        if jt.size == 0:
            raise ConfigError("jump-size family needs an input with a jump")
        t0 = float(jt[0])
        J = u.eval(t0) - u.left_limit(t0)
        step = _unit(J) / (2 * n)
        return u + BVPath([0.0, t0, T], [np.zeros(d), np.zeros(d), step], [np.zeros(d), step, step])
    a, b = _continuous_stretch(u)
    if family == "reshape":
        return u + _hat(T, a, b, e, 1.0 / (3 * n))
    if family == "wiggles":
        k = 5
        return u + _zigzag(T, a, b, e, 1.0 / ((1 + 2 * k) * n), k)
    if family == "staircase":
        N = 4 * n
        cells = np.linspace(0.0, T, N + 1)
        vals = u.eval_many(cells[:-1])
        left = np.vstack([vals[:1], vals])
        right = np.vstack([vals, vals[-1:]])
        return BVPath(cells, left, right)
    raise ConfigError(f"unknown perturbation family {family!r}")


def _on_common_grid(z0, u: BVPath, un: BVPath, Z: ConvexSet, h: float) -> tuple[BVPath, BVPath]:
    grid = Grid.uniform(u.T, h, include=np.union1d(u.times, un.times))
    y = play(z0, u, Z, grid, residuals=False).trajectory
    yn = play(z0, un, Z, grid, residuals=False).trajectory
    return y, yn


def bv_continuity(config: dict[str, Any], h: float, seed: int = 0) -> dict[str, Any]:
    """Rows ``(family, n, |u_n - u|_BV, d_us, d_inf(y_n, y), |y_n - y|_BV, h)`` and per-family fits.

    For every BV-convergent family ``C = max_{n <= 2} n |y_n - y|_BV`` is
    fitted and the bound ``|y_n - y|_BV <= C/n + 10h`` is checked on all rows.
    """
    _validate(config, EXPERIMENT_SCHEMA, "$")
    base = {**default_experiment(), **config}
    Z = convex_set_from_dict(base["Z"])
    u = BVPath.from_dict(base["u"])
    z0 = as_point(base["z0"], Z.dim)
    rows, fits = [], {}
    for fam in base["families"]:
        fam_rows = []
        for n in base["ns"]:
            # one stream per family: every n perturbs along the same direction
            rng = np.random.default_rng([seed, FAMILIES.index(fam)])
            un = perturbation(u, fam, n, rng)
            y, yn = _on_common_grid(z0, u, un, Z, h)
            fam_rows.append(
                {
                    "family": fam,
                    "n": n,
                    "input_bv": bv_norm_dist(un, u),
                    "input_dus": d_us(un, u),
                    "output_dinf": d_inf(yn, y),
                    "output_bv": bv_norm_dist(yn, y),
                    "h": h,
                }
            )
        rows += fam_rows
        C = max(r["n"] * r["output_bv"] for r in fam_rows if r["n"] <= 2)
        bound_ok = all(r["output_bv"] <= C / r["n"] + 10 * h for r in fam_rows)
        first, last = fam_rows[0], fam_rows[-1]
        bv_small = last["input_bv"] <= 1.5 / last["n"]
        fits[fam] = {
            "C": C,
            "bound_holds": bound_ok,
            "bv_convergent": bv_small,
            # strict-only convergence: d_us shrinks while the BV distance stays put
            "flag_strict_only": (not bv_small) and last["input_dus"] < first["input_dus"],
        }
    return {"rows": rows, "fits": fits, "h": h, "seed": seed}


def cmd_bv_continuity(args) -> int:
    config = load_json(args.config) if args.config else {}
    h = args.h or config.get("h", DEFAULT_H)
    seed = args.seed if args.seed is not None else config.get("seed", 0)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    res = bv_continuity({k: v for k, v in config.items() if k not in ("h", "seed")}, h, seed)
    with open(outdir / "bv_continuity.csv", "w", newline="") as fh:
        cols = ["family", "n", "input_bv", "input_dus", "output_dinf", "output_bv", "h"]
        w = csv.DictWriter(fh, cols, lineterminator="\n")
        w.writeheader()
        for r in res["rows"]:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    _dump({"fits": res["fits"], "h": h, "seed": seed}, outdir / "bv_continuity_summary.json")
    ok = True
    for fam, f in res["fits"].items():
        if f["bv_convergent"]:
            ok &= f["bound_holds"]
            print(f"{fam:<10} C={f['C']:.4f} bound {'holds' if f['bound_holds'] else 'VIOLATED'}")
        else:
            print(f"{fam:<10} not BV-convergent" + (" (strict-only convergence flagged)" if f["flag_strict_only"] else ""))
    log.info("experiment took %.2f s", time.perf_counter() - t0)
    return 0 if ok else 1


# -------------------------------------------------------------- schemas


def cmd_describe_schemas(args) -> int:
    schemas = {
        "convex_set": CONVEX_SET_SCHEMA,
        "bvpath": BVPATH_SCHEMA,
        "set_path": SETPATH_SCHEMA,
        "solve_request": SOLVE_REQUEST_SCHEMA,
        "bv_continuity": EXPERIMENT_SCHEMA,
    }
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        for name, s in schemas.items():
            _dump(s, outdir / f"{name}.schema.json")
    else:
        print(json.dumps(schemas, indent=2, sort_keys=True))
    return 0


# ----------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sweepplay", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required: bool, out_required: bool = True):
        sp.add_argument("--config", required=config_required)
        sp.add_argument("--out", required=out_required)
        sp.add_argument("--h", type=float, default=None)
        sp.add_argument("--seed", type=int, default=None)

    sp = sub.add_parser("solve", help="solve one request and verify the output")
    common(sp, True)
    sp.add_argument("--method", choices=["direct", "reparam", "both"], default=None)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("corpus", help="run the verification suite over a directory of requests")
    common(sp, False)
    sp.set_defaults(func=cmd_corpus)

    sp = sub.add_parser("bv-continuity", help="BV-norm continuity experiment")
    common(sp, False)
    sp.set_defaults(func=cmd_bv_continuity)

    sp = sub.add_parser("describe-schemas", help="print the JSON schemas")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_describe_schemas)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if getattr(args, "seed", None) is None and args.command in ("solve", "corpus"):
        args.seed = 0
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except SweepError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
