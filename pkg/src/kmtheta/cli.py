"""kmtheta command line.

Exit codes: 0 pass, 1 check failure, 2 invalid input, 3 budget exceeded.

Input JSON (one job per file):

    {"field": {"degree": 1} | {"degree": 2, "D": 5},
     "gram": [[...]], "e": 1,
     "zbasis": [[...], ...],                      optional, default O_F^{n+2}
     "tau": [{"place": 1, "alpha": [...], "beta": [...]}, ...],   optional
     "r": 1, "coset": ["1/2", 0, ...],            optional
     "x": [[...], ...]}                           optional, green-diagnostics

A lattice document {"space": {...}, "zbasis": ...} or {"lattice": "E8"} is
also accepted.  Missing period points are drawn from --seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import diagnostics
from .genseries import (BudgetExceeded, DivergentSeries, GeneratingSeriesSpec, QExpansion, q_expansion,
                        tail_model, theta_coefficients)
from .greens import SingularLocusError, count_bounded_R, eta3_partial_sums, fit_decay
from .kmform import KMFrame
from .lattice import MajorantError, OLattice, e8_lattice, enumerate_majorant, total_majorant
from .numberfield import TotallyRealField, parse_element
from .perioddomain import PlaneError, make_period_point, random_period_point
from .quadspace import ProfileError, QuadraticSpace

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


class InputError(ValueError):
    pass


@dataclass
class JobConfig:
    command: str
    input: Path | None
    output: Path | None
    epsilon: float
    radius: float | None
    seed: int
    place: int
    grid: int


@dataclass
class Job:
    lattice: OLattice
    tau: tuple
    r: int
    coset: tuple | None
    xs: list | None


# input ---------------------------------------------------------------------

def _space_from(obj: dict) -> QuadraticSpace:
    F = TotallyRealField.from_json(obj.get("field", {"degree": 1}))
    gram = obj["gram"]
    if not isinstance(gram, list) or not all(isinstance(row, list) for row in gram):
        raise InputError("gram must be a list of rows")
    return QuadraticSpace.from_entries(F, gram, int(obj["e"]))


def load_job(path: Path | None, seed: int, check_profile: bool = True, with_tau: bool = True) -> Job:
    if path is None:
        raise InputError("--input is required")
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise InputError("top level must be a JSON object")
    try:
        if obj.get("lattice") == "E8":
            lattice = e8_lattice()
        else:
            space = _space_from(obj["space"] if "space" in obj else obj)
            if check_profile:
                space.check_profile()
            F = space.field
            if obj.get("zbasis") is None:
                lattice = OLattice.standard(space)
            else:
                lattice = OLattice(space, tuple(tuple(parse_element(F, c) for c in v) for v in obj["zbasis"]))
        space = lattice.space
        rng = np.random.default_rng(seed)
        if not with_tau:
            tau = ()
        elif obj.get("tau"):
            tau = tuple(make_period_point(space, int(t["place"]), t["alpha"], t["beta"]) for t in obj["tau"])
            if [t.place for t in tau] != list(range(1, space.e + 1)):
                raise InputError("tau must list places 1..e in order")
        else:
            tau = tuple(random_period_point(space, i, rng) for i in range(1, space.e + 1))
        coset = tuple(Fraction(str(c)) for c in obj["coset"]) if obj.get("coset") else None
        xs = None
        if obj.get("x"):
            xs = [tuple(parse_element(space.field, c) for c in v) for v in obj["x"]]
            if any(len(v) != space.dim for v in xs):
                raise InputError("x vectors have the wrong length")
        r = int(obj.get("r", 1))
    except InputError:
        raise
    except (KeyError, TypeError, ValueError, ZeroDivisionError, ProfileError, PlaneError,
            np.linalg.LinAlgError) as exc:
        raise InputError(f"invalid input: {exc}") from exc
    return Job(lattice, tau, r, coset, xs)


def _emit_json(obj, path: Path | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, default=str)
    if path:
        Path(path).write_text(text + "\n")
    else:
        print(text)


# commands ------------------------------------------------------------------

def cmd_inspect(cfg: JobConfig) -> int:
    job = load_job(cfg.input, cfg.seed, check_profile=False, with_tau=False)
    space = job.lattice.space
    F = space.field
    print("field: Q" if F.degree == 1 else f"field: Q(sqrt({F.D}))")
    print(f"dim: {space.dim}  n: {space.n}  e: {space.e}  rank over Z: {job.lattice.rank}")
    ok = True
    for i in range(1, space.d + 1):
        try:
            sig = space.signature_at(i)
        except np.linalg.LinAlgError as exc:
            print(f"place {i}: singular ({exc})")
            ok = False
            continue
        want = (space.dim - 2, 2) if i <= space.e else (space.dim, 0)
        good = sig == want
        ok &= good
        print(f"place {i}: signature {sig}  expected {want}  {'ok' if good else 'MISMATCH'}")
    if 1 <= cfg.place <= space.d:
        print(f"embedded Gram at place {cfg.place}:")
        print(np.array2string(space.embedded_gram(cfg.place), precision=6))
    print("profile: PASS" if ok else "profile: FAIL")
    return EXIT_OK if ok else EXIT_INPUT


def _theta_definite(job: Job, cfg: JobConfig) -> QExpansion:
    spec = GeneratingSeriesSpec(job.lattice, 1, (), epsilon=cfg.epsilon)
    model = tail_model(spec, None, scaled=False)
    B = cfg.radius if cfg.radius is not None else model.radius_for(cfg.epsilon)
    counts = theta_coefficients(job.lattice, B)
    qexp = QExpansion(job.lattice.space.n, 0, B, model.tail(B), complete=True)
    for q, c in counts.items():
        key = repr(q)
        qexp.T[key] = [[q]]
        qexp.coefficients[key] = np.array([complex(c)])
    return qexp


def cmd_theta(cfg: JobConfig) -> int:
    job = load_job(cfg.input, cfg.seed)
    if job.lattice.space.e == 0 and job.r == 1 and job.coset is None:
        qexp = _theta_definite(job, cfg)
    else:
        spec = GeneratingSeriesSpec(job.lattice, job.r, job.tau, epsilon=cfg.epsilon, coset=job.coset)
        qexp = q_expansion(spec, cfg.radius)
    qexp.write_csv(cfg.output or sys.stdout)
    return EXIT_OK


def cmd_check(cfg: JobConfig) -> int:
    job = load_job(cfg.input, cfg.seed)
    records = diagnostics.suite(job.lattice, job.tau, cfg.seed, cfg.grid)
    failed = [r.to_json() for r in records if not r.passed]
    _emit_json({"results": [r.to_json() for r in records], "passed": not failed, "failed": failed}, cfg.output)
    return EXIT_OK if not failed else EXIT_CHECK


def _default_xs(job: Job) -> list:
    """The shortest lattice vector with totally positive q."""
    lat = job.lattice
    M = total_majorant(lat, job.tau)
    for y in enumerate_majorant(M, 40.0).coords[1:]:
        v = lat.vector([int(t) for t in y])
        if all(e > 0 for e in lat.space.quad_value(v).embeddings()):
            return [v]
    raise InputError("no totally positive vector found; pass x explicitly")


def cmd_green(cfg: JobConfig) -> int:
    job = load_job(cfg.input, cfg.seed)
    if job.lattice.space.e == 0:
        raise InputError("green diagnostics need an indefinite place")
    xs = job.xs or _default_xs(job)
    frames = tuple(KMFrame.at(t) for t in job.tau)
    base = float(sum(sum(job.lattice.space.quad_value(x).embeddings()) for x in xs))
    top = cfg.radius if cfg.radius is not None else 40.0
    radii = list(base + np.linspace(top / cfg.grid, top, cfg.grid))
    report = eta3_partial_sums(xs, job.tau, frames, job.lattice, radii)
    path = cfg.output or Path("convergence.csv")
    report.write_csv(path)
    fit = fit_decay(report)
    print(json.dumps({"csv": str(path), "cauchy": report.is_cauchy(), "skipped": report.skipped,
                      "slope": fit.get("slope"), "model_slope": -2 * np.pi,
                      "ratio_max": fit["ratio_max"], "terms": report.terms}, indent=2))
    return EXIT_OK


def cmd_count(cfg: JobConfig) -> int:
    job = load_job(cfg.input, cfg.seed)
    if job.lattice.space.e == 0:
        raise InputError("R-counts need an indefinite place")
    top = cfg.radius if cfg.radius is not None else 400.0
    Ns = list(np.geomspace(top / 16, top, cfg.grid))
    res = count_bounded_R(job.lattice, job.tau, Ns, level_set=True)
    rows = [[repr(float(N)), c, lv] for N, c, lv in zip(res["N"], res["counts"], res["level_counts"])]
    fh = open(cfg.output, "w", newline="") if cfg.output else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["N", "count", "level_set_count"])
        w.writerows(rows)
    finally:
        if cfg.output:
            fh.close()
    print(f"# exponent {res['exponent']:.4f} (target {job.lattice.rank / 2})", file=sys.stderr)
    return EXIT_OK


def cmd_selftest(cfg: JobConfig) -> int:
    records = diagnostics.selftest(cfg.seed)
    for r in records:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}  value={r.value:.3e}")
    return EXIT_OK if all(r.passed for r in records) else EXIT_CHECK


COMMANDS = {
    "inspect": cmd_inspect,
    "theta": cmd_theta,
    "check": cmd_check,
    "green-diagnostics": cmd_green,
    "count-R": cmd_count,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kmtheta", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=list(COMMANDS))
    p.add_argument("--input", type=Path)
    p.add_argument("--output", type=Path)
    p.add_argument("--epsilon", type=float, default=1e-8)
    p.add_argument("--radius", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--place", type=int, default=1)
    p.add_argument("--grid", type=int, default=10)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = JobConfig(args.command, args.input, args.output, args.epsilon, args.radius, args.seed,
                    args.place, args.grid)
    if not cfg.epsilon > 0 or cfg.grid < 2:
        print("error: epsilon must be positive and grid at least 2", file=sys.stderr)
        return EXIT_INPUT
    try:
        return COMMANDS[cfg.command](cfg)
    except (InputError, MajorantError, DivergentSeries) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except SingularLocusError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
