"""Command-line interface: radius verdicts, boundary sections, T-state
analytics, the POVM gap report, and LP export, all seeded and reproducible.

Exit codes: 0 decided, 2 undecided, 1 error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from importlib.metadata import version as _dist_version

import numpy as np

from . import boundary, canonical, lp_engine, polytope, povm_lab, qstate, radius

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNDECIDED = 2


def _version() -> str:
    try:
        return _dist_version("qsteer")
    except Exception:
        return "unknown"


def _polytope_hash(name: str) -> str:
    poly = polytope.load_covering(name)
    return hashlib.sha256(np.ascontiguousarray(poly.vertices).tobytes()).hexdigest()[:16]


def _run_stamp(polytope_name: str | None, extra: dict | None = None) -> dict:
    stamp = {"version": _version()}
    if polytope_name is not None:
        stamp["polytope"] = polytope_name
        stamp["polytope_sha256_16"] = _polytope_hash(polytope_name)
    if extra:
        stamp.update(extra)
    return stamp


def _parse_family(text: str) -> qstate.DensityMatrix:
    tag, _, rest = text.partition(":")
    params = [float(x) for x in rest.split(",")] if rest else []
    if tag == "werner":
        return qstate.werner(*params)
    if tag == "theta":
        return qstate.theta_state(*params)
    if tag == "tstate":
        return qstate.state_from_json(json.dumps({"family": {
            "tag": "tstate", "s1": params[0], "s2": params[1], "s3": params[2],
        }}))
    if tag == "random":
        return qstate.random_state(int(params[0]),
                                   int(params[1]) if len(params) > 1 else 4)
    if tag == "singlet":
        return qstate.singlet()
    raise ValueError(f"unknown family {tag!r}; known: werner, theta, tstate, "
                     "random, singlet")


def _load_state(args) -> qstate.DensityMatrix:
    sources = [s for s in (args.family, args.bloch, args.state_file) if s]
    if len(sources) != 1:
        raise ValueError("provide exactly one of --family, --bloch, --state-file")
    if args.family:
        return _parse_family(args.family)
    if args.bloch:
        return qstate.state_from_json(json.dumps({"bloch": json.loads(args.bloch)}))
    with open(args.state_file) as fh:
        return qstate.state_from_json(fh.read())


def _add_state_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", help="named family, e.g. werner:0.3 or theta:0.5,0.8")
    p.add_argument("--bloch", help='Bloch JSON, e.g. \'{"a":[0,0,0],"b":[0,0,0],"T":0}\'')
    p.add_argument("--state-file", help="JSON state document")
    p.add_argument("--allow-improper", action="store_true",
                   help="accept states with negative eigenvalues")


def _direction(text: str) -> str:
    low = text.lower()
    if low in ("ab", "atob", "a2b"):
        return "AtoB"
    if low in ("ba", "btoa", "b2a"):
        return "BtoA"
    raise ValueError(f"unknown direction {text!r}")


def _write_or_print(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_radius(args) -> int:
    rho = _load_state(args)
    if rho.improper and not args.allow_improper:
        raise ValueError("state is improper; pass --allow-improper to proceed")
    bounds = radius.critical_radius_bounds(
        rho, args.polytope, _direction(args.direction), gap_tol=args.gap_tol,
    )
    doc = json.loads(bounds.to_json())
    doc["stamp"] = _run_stamp(args.polytope, {"gap_tol": args.gap_tol})
    _write_or_print(json.dumps(doc, indent=2) + "\n", args.out)
    if args.out:
        r_in = "inf" if np.isinf(bounds.R_in) else f"{bounds.R_in:.9g}"
        r_out = "inf" if np.isinf(bounds.R_out) else f"{bounds.R_out:.9g}"
        print(f"R_in={r_in} R_out={r_out} verdict={bounds.verdict}")
    return EXIT_UNDECIDED if bounds.verdict == "Undecided" else EXIT_OK


def cmd_section(args) -> int:
    spec = boundary.SectionSpec(
        seed=args.seed, rays=args.rays, polytope=args.polytope,
        samples_per_ray=args.samples_per_ray, tol=args.tol,
        gap_tol=args.gap_tol,
    )
    result = boundary.cross_section(spec)
    _write_or_print(result.csv_text, args.out)
    sidecar = json.loads(result.sidecar_json)
    sidecar["stamp"] = _run_stamp(args.polytope)
    if args.out:
        with open(args.out + ".json", "w") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)
        print(f"wrote {len(result.points)} classified points to {args.out}")
    return EXIT_OK


def cmd_tstate(args) -> int:
    s = np.array([float(x) for x in args.s.split(",")], dtype=float)
    if len(s) != 3:
        raise ValueError("--s needs three comma-separated values")
    value = radius.tstate_analytic(s)
    grad = radius.tstate_gradient(s)
    doc = {
        "s": s.tolist(),
        "R": value,
        "gradient": grad.tolist(),
        "stamp": _run_stamp(None),
    }
    _write_or_print(json.dumps(doc, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_theta_scan(args) -> int:
    grid = [float(x) for x in args.thetas.split(",")]
    windows = boundary.theta_scan(grid, p=args.p, q=args.q, tol=args.tol)
    lines = ["theta,alpha_ba,alpha_ab_lo,alpha_ab_hi"]
    for w in windows:
        hi = "inf" if np.isinf(w.alpha_ab_hi) else f"{w.alpha_ab_hi:.6g}"
        lines.append(f"{w.theta:.6g},{w.alpha_ba:.6g},{w.alpha_ab_lo:.6g},{hi}")
    _write_or_print("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_povm_test(args) -> int:
    poly = polytope.load_covering(args.polytope)
    normals = polytope.enumerate_facet_normals(poly)
    schedule = povm_lab.AnnealSchedule(restarts=args.restarts)
    csv_text = povm_lab.gap_report(args.pairs, poly, normals, args.seed, schedule)
    _write_or_print(csv_text, args.out)
    if args.out:
        print(f"wrote {args.pairs} pairs to {args.out}")
    return EXIT_OK


def cmd_lp_export(args) -> int:
    rho = _load_state(args)
    if rho.improper and not args.allow_improper:
        raise ValueError("state is improper; pass --allow-improper to proceed")
    can = canonical.canonicalize(rho)
    poly = polytope.load_covering(args.polytope)
    normals = polytope.enumerate_facet_normals(poly)
    lp = lp_engine.build_lp(can, poly, normals)
    _write_or_print(lp_engine.export_lp_text(lp), args.lp_out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsteer",
        description="Certified steerability bounds for two-qubit states",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {_version()}")
    parser.add_argument("--threads", type=int, default=None,
                        help="BLAS thread cap (default: library default)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("radius", help="certified critical-radius bounds")
    _add_state_args(p)
    p.add_argument("--polytope", default="icosa-92")
    p.add_argument("--direction", default="ab")
    p.add_argument("--gap-tol", type=float, default=0.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_radius)

    p = sub.add_parser("section", help="classified 2D cross-section CSV")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--rays", type=int, default=200)
    p.add_argument("--polytope", default="icosa-92")
    p.add_argument("--samples-per-ray", type=int, default=5)
    p.add_argument("--tol", type=float, default=boundary.DEFAULT_TOL)
    p.add_argument("--gap-tol", type=float, default=0.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_section)

    p = sub.add_parser("tstate", help="analytic T-state radius and gradient")
    p.add_argument("--s", required=True, help="three correlations, e.g. 1,1,0.5")
    p.add_argument("--out")
    p.set_defaults(func=cmd_tstate)

    p = sub.add_parser("theta-scan", help="one-way window of the theta family")
    p.add_argument("--thetas", default="0.19634954084936207,0.39269908169872414,0.7853981633974483")
    p.add_argument("--p", type=int, default=25)
    p.add_argument("--q", type=int, default=52)
    p.add_argument("--tol", type=float, default=2e-3)
    p.add_argument("--out")
    p.set_defaults(func=cmd_theta_scan)

    p = sub.add_parser("povm-test", help="annealed POVM vs projective gap CSV")
    p.add_argument("--pairs", type=int, default=20)
    p.add_argument("--polytope", default="icosa-42")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_povm_test)

    p = sub.add_parser("lp-export", help="write the LP in text form")
    _add_state_args(p)
    p.add_argument("--polytope", default="icosa-12")
    p.add_argument("--lp-out")
    p.set_defaults(func=cmd_lp_export)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        try:
            import threadpoolctl

            threadpoolctl.threadpool_limits(args.threads)
        except ImportError:
            pass
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, IndexError,
            qstate.StateValidationError, polytope.PolytopeError,
            canonical.AbnormalStateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
