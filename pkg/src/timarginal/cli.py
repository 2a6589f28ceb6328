"""Command-line entry point: ``timarginal <subcommand> ...``.

Exit codes: 0 success, 1 negative verdict, 2 bad input, 3 budget exceeded.
All JSON is written with sorted keys so identical runs give identical bytes.
"""
import argparse
import csv
import io
import json
import sys
from fractions import Fraction

from . import exactlp, exactsets, hierarchy, lattice, polytope
from .errors import DomainError, ResourceError, StructuralError
from .hierarchy import DEFAULT_BUDGET, Hamiltonian
from .lattice import MarginalSpec, Pattern, region_from_name
from .rational import fmt, to_rational
from .tiling import kari, wang

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


class InputError(Exception):
    pass


class VerificationError(Exception):
    pass


def _read_json(path: str, what: str):
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {what} file {path!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{what} file {path!r} is not valid JSON: {exc}") from None


def _load(path, what, parser):
    data = _read_json(path, what)
    if not isinstance(data, dict):
        raise InputError(f"{what} file {path!r} must hold a JSON object")
    try:
        return parser(data)
    except (StructuralError, DomainError) as exc:
        raise InputError(f"{what}: {exc}") from None
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{what}: malformed field ({exc})") from None


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


class _Output:
    def __init__(self, path):
        self.path = path

    def write(self, text: str):
        if self.path in (None, "-"):
            sys.stdout.write(text)
        else:
            with open(self.path, "w") as fh:
                fh.write(text)


def _verify(ok: bool, what: str):
    if not ok:
        raise VerificationError(f"independent check failed: {what}")


def _regions(names):
    try:
        return [region_from_name(n) for n in names]
    except (StructuralError, DomainError, ValueError) as exc:
        raise InputError(f"regions: {exc}") from None


# ---------------------------------------------------------------- subcommands


def cmd_marginal_check(args):
    spec = _load(args.spec, "spec", MarginalSpec.from_json)
    build = hierarchy.square_program if args.square else hierarchy.strip_program
    program = build(spec, args.level, budget=args.budget)
    cert = program.solve()
    if args.verify:
        _verify(exactlp.verify_certificate(program.lp, cert), "LP certificate")
    feasible = cert.is_feasible
    out = {"verdict": "feasible" if feasible else "infeasible", "level": args.level,
           "relaxation": "square" if args.square else "strip", "certificate": cert.to_dict()}
    args.out.write(_dumps(out))
    return EXIT_OK if feasible else EXIT_NEGATIVE


def cmd_energy(args):
    H = _load(args.hamiltonian, "hamiltonian", Hamiltonian.from_json)
    bounds = hierarchy.energy_bounds(H, args.level, args.max_period, budget=args.budget)
    if args.verify:
        _verify(bounds.lower <= bounds.upper, "lower bound exceeds upper bound")
        _verify(H.pattern_energy(bounds.witness_pattern) == bounds.upper, "witness energy")
    args.out.write(_dumps(bounds.to_json()))
    return EXIT_OK


def _looks_like(data, key):
    return isinstance(data, dict) and key in data


def cmd_exact(args):
    case = args.case.replace("-", "_")
    data = _read_json(args.input, "input")
    if case == "reflection":
        return _exact_reflection(args, data)
    if _looks_like(data, "terms"):
        H = _load(args.input, "hamiltonian", Hamiltonian.from_json)
        lib_case = case
        value, vertex = exactsets.exact_energy_by_vertices(lib_case, H)
        lib = exactsets.load_library(lib_case)
        index = lib.vertices.index(vertex)
        if args.verify:
            lower = hierarchy.energy_lower_bound(H, 2, budget=args.budget)
            _verify(lower == value, "level-2 lower bound differs from vertex minimum")
            _verify(H.pattern_energy(lib.generators[index]) == value, "generator energy")
        out = {"case": args.case, "value": fmt(value), "class": lib.labels[index],
               "vertex": [fmt(v) for v in vertex], "generator": lib.generators[index].to_json()}
        args.out.write(_dumps(out))
        return EXIT_OK
    spec = _load(args.input, "spec", MarginalSpec.from_json)
    tables = list(spec.entries)
    if case == "d2_nn":
        verdict = exactsets.check_d2_nn(tables, len(tables))
        if args.verify and len(tables) == 2:
            _verify(hierarchy.strip_feasible(spec, 2, budget=args.budget).is_feasible == verdict,
                    "strip LP disagrees with the pairwise condition")
    elif case == "d2_nnn":
        verdict = exactsets.check_d2_nnn(*_by_region(tables, exactsets.CASES["d2_nnn"][1]),
                                         cross_check=args.verify)
    elif case == "d3_nn":
        verdict = exactsets.check_d3_nn(*_by_region(tables, exactsets.CASES["d3_nn"][1]),
                                        cross_check=args.verify)
    else:
        raise InputError(f"unknown case {args.case!r}")
    args.out.write(_dumps({"case": args.case, "verdict": verdict}))
    return EXIT_OK if verdict else EXIT_NEGATIVE


def _by_region(tables, regions):
    out = []
    for r in regions:
        hits = [t for t in tables if t.region.normalized() == r.normalized()]
        if len(hits) != 1:
            raise InputError(f"spec needs exactly one table on {r.to_json()}")
        out.append(hits[0])
    return out


def _exact_reflection(args, data):
    if _looks_like(data, "terms"):
        H = _load(args.input, "hamiltonian", Hamiltonian.from_json)
        value = exactsets.solve_reflection_energy(H)
        if args.verify:
            lower = hierarchy.energy_lower_bound(H, 3, budget=args.budget)
            _verify(lower == value, "level-3 strip lower bound differs")
        args.out.write(_dumps({"case": args.case, "value": fmt(value)}))
        return EXIT_OK
    spec = _load(args.input, "spec", MarginalSpec.from_json)
    if len(spec.entries) != 1:
        raise InputError("a reflection spec holds exactly one table on rect(s, 2)")
    Q = spec.entries[0]
    try:
        rs = exactsets.ReflectionSpec(Q.region.normalized().width, Q)
    except StructuralError as exc:
        raise InputError(str(exc)) from None
    verdict = exactsets.check_reflection_ti(rs)
    args.out.write(_dumps({"case": args.case, "verdict": verdict}))
    return EXIT_OK if verdict else EXIT_NEGATIVE


def _label_key(label):
    return (label[0], int(label[1:])) if label[1:].isdigit() else (label, 0)


def cmd_vertices(args):
    if args.case:
        key = args.case.replace("-", "_")
        if key not in exactsets.CASES:
            raise InputError(f"unknown case {args.case!r}; choose from d2-nn, d2-nnn, d3-nn")
        d, regions, strip = exactsets.CASES[key]
    else:
        if args.d is None or args.strip is None or not args.regions:
            raise InputError("give --case, or all of --d, --strip and --regions")
        d, strip, regions = args.d, tuple(args.strip), _regions(args.regions)
    poly = polytope.project_lti(d, strip, list(regions), seed=args.seed, budget=args.budget)
    verts = sorted(poly.v_rep)
    labels = None
    if args.case:
        lib = exactsets.load_library(args.case)
        stored = dict(zip(lib.vertices, lib.labels))
        if set(stored) == set(verts):
            labels = [stored[v] for v in verts]
        if args.verify:
            _verify(set(stored) == set(verts), "computed vertices differ from the stored library")
            for v, g in zip(lib.vertices, lib.generators):
                _verify(exactsets.marginal_point(g, regions) == v, "generator reproduces vertex")
    if labels is None:
        try:
            group = polytope.lattice_symmetry_group(d, regions)
        except DomainError:
            group = polytope.lattice_symmetry_group(d, regions, rotations=False)
        labels = [None] * len(verts)
        pos = {v: i for i, v in enumerate(verts)}
        for number, (_, members) in enumerate(polytope.quotient_classes(poly, group), start=1):
            for m in members:
                labels[pos[tuple(m)]] = f"K{number}"
    if args.verify and poly.h_rep:
        for normal, offset in poly.h_rep:
            verdict, _ = polytope.verify_facet(poly, normal, offset)
            _verify(verdict == polytope.FACET, "facet check")
    classes = {}
    for v, lab in zip(verts, labels):
        classes.setdefault(lab, []).append(v)
    report = [{"label": lab, "size": len(members), "representative": [fmt(x) for x in min(members)]}
              for lab, members in sorted(classes.items(), key=lambda kv: _label_key(kv[0]))]
    out = {"d": d, "strip": list(strip), "regions": [r.to_json() for r in regions],
           "num_vertices": len(verts), "num_classes": len(report), "classes": report,
           "polytope": poly.to_json()}
    args.out.write(_dumps(out))
    return EXIT_OK


def cmd_tiling_check(args):
    rule = _load(args.rule, "rule", wang.TilingRule.from_json)
    grid = _load(args.grid, "grid", Pattern.from_json)
    check = wang.is_valid_tiling(rule, grid, args.wrap)
    if args.verify and args.wrap == wang.WRAP_TORUS:
        value = wang.rule_to_hamiltonian(rule).maximize.pattern_energy(grid)
        _verify((value == 2) == check.valid, "tiling energy")
    out = {"valid": check.valid}
    if check.violation:
        kind, (x, y), pair = check.violation
        out["violation"] = {"direction": kind, "x": x, "y": y, "pair": list(pair)}
    args.out.write(_dumps(out))
    return EXIT_OK if check.valid else EXIT_NEGATIVE


def cmd_tiling_reduce(args):
    rule = _load(args.rule, "rule", wang.TilingRule.from_json)
    reduced = wang.rule_to_hamiltonian(rule)
    H = reduced.minimize if args.form == "minimize" else reduced.maximize
    if args.verify:
        _verify(H.negated().to_json() == (reduced.maximize if args.form == "minimize"
                                          else reduced.minimize).to_json(), "sign convention")
    args.out.write(_dumps(H.to_json()))
    return EXIT_OK


def cmd_tiling_search(args):
    rule = _load(args.rule, "rule", wang.TilingRule.from_json)
    result = wang.periodic_tiling_search(rule, args.max_period, budget=args.budget)
    if result.partial and not result.found:
        raise ResourceError("search budget exhausted", needed=None, budget=args.budget)
    if args.verify and result.found:
        _verify(wang.is_valid_tiling(rule, result.pattern, wang.WRAP_TORUS).valid, "torus validity")
    out = {"found": result.found, "nodes": result.nodes,
           "pattern": result.pattern.to_json() if result.found else None}
    args.out.write(_dumps(out))
    return EXIT_OK if result.found else EXIT_NEGATIVE


def cmd_kari_gen(args):
    system = (kari.KariSystem.rotation() if args.system is None
              else _load(args.system, "system", kari.KariSystem.from_json))
    alphabet = kari.kari_alphabet(system, labeled=args.labeled)
    if args.verify:
        _verify(all(t.is_consistent(system) for t in alphabet), "f(t) + l = b + r")
    if args.output not in (None, "-"):
        with open(args.output, "w") as fh:
            fh.write(_dumps({"system": system.to_json(), "count": len(alphabet),
                             "tiles": [t.to_json() for t in alphabet]}))
    sys.stdout.write(f"{len(alphabet)}\n")
    return EXIT_OK


def cmd_kari_curve(args):
    if args.mu_samples < 2:
        raise InputError("--mu-samples must be at least 2")
    lo, hi = Fraction(1, 5), Fraction(2, 5)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["mu", "omega", "eta", "omega_sampled", "eta_sampled"])
    for i in range(args.mu_samples):
        mu = lo + (hi - lo) * Fraction(i, args.mu_samples - 1)
        if args.verify:
            _verify(kari.immortal(kari.circle_point(mu)), f"starting point for mu={mu} is immortal")
        omega, eta = kari.curve_point(mu)
        w = kari.sampled_witness(mu, args.rows, args.cols).as_floats()
        writer.writerow([fmt(mu), f"{omega:.12g}", f"{eta:.12g}", f"{w[0]:.12g}", f"{w[1]:.12g}"])
    args.out.write(buf.getvalue())
    return EXIT_OK


def cmd_symmetrize(args):
    pattern = _load(args.pattern, "pattern", Pattern.from_json)
    regions = _regions(args.regions)
    spec = lattice.symmetrize_pattern(pattern, regions)
    if args.verify:
        area = pattern.width * pattern.height
        for dist, r in zip(spec.entries, regions):
            counts = lattice.window_counts(pattern, r)
            _verify(all(dist.probs.get(c, 0) == Fraction(n, area) for c, n in counts.items()),
                    "window counts")
    args.out.write(_dumps(spec.to_json()))
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--output", help="write the result here instead of stdout")
    common.add_argument("--verify", action="store_true", help="re-check results independently")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="LP variable / search node budget")

    parser = argparse.ArgumentParser(prog="timarginal", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("marginal-check", parents=[common], help="level-n LTI feasibility of a spec")
    p.add_argument("spec")
    p.add_argument("--level", type=int, default=2)
    p.add_argument("--square", action="store_true", help="use the n x n relaxation instead of the strip")
    p.set_defaults(func=cmd_marginal_check)

    p = sub.add_parser("energy", parents=[common], help="lower and upper bounds on the energy per site")
    p.add_argument("hamiltonian")
    p.add_argument("--level", type=int, default=2)
    p.add_argument("--max-period", type=int, default=3)
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser("exact", parents=[common], help="exact verdicts or energies for solved cases")
    p.add_argument("input", help="spec JSON (verdict) or Hamiltonian JSON (energy)")
    p.add_argument("--case", required=True, choices=["d2-nn", "d2-nnn", "d3-nn", "reflection"])
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("vertices", parents=[common], help="vertices and symmetry classes of an LTI polytope")
    p.add_argument("--case", choices=["d2-nn", "d2-nnn", "d3-nn"])
    p.add_argument("--d", type=int)
    p.add_argument("--strip", type=int, nargs=2, metavar=("WIDTH", "HEIGHT"))
    p.add_argument("--regions", nargs="+", help="h, v, plus, minus, site or rect(m,n)")
    p.set_defaults(func=cmd_vertices)

    p = sub.add_parser("tiling-check", parents=[common], help="validate a grid against a tiling rule")
    p.add_argument("rule")
    p.add_argument("grid")
    p.add_argument("--wrap", choices=wang.WRAPS, default=wang.WRAP_NONE)
    p.set_defaults(func=cmd_tiling_check)

    p = sub.add_parser("tiling-reduce", parents=[common], help="Hamiltonian of a tiling rule")
    p.add_argument("rule")
    p.add_argument("--form", choices=["minimize", "maximize"], default="minimize")
    p.set_defaults(func=cmd_tiling_reduce)

    p = sub.add_parser("tiling-search", parents=[common], help="search for a periodic tiling")
    p.add_argument("rule")
    p.add_argument("--max-period", type=int, default=4)
    p.set_defaults(func=cmd_tiling_search)

    p = sub.add_parser("kari-gen", parents=[common], help="generate the tile alphabet of an affine system")
    p.add_argument("system", nargs="?", help="system JSON; defaults to the built-in rotation system")
    p.add_argument("--labeled", action="store_true", help="one tile per (region, top vector) pair")
    p.set_defaults(func=cmd_kari_gen)

    p = sub.add_parser("kari-curve", parents=[common], help="sampled witnesses against the limit curve (CSV)")
    p.add_argument("--mu-samples", type=int, default=5)
    p.add_argument("--rows", type=int, default=1000)
    p.add_argument("--cols", type=int, default=201)
    p.set_defaults(func=cmd_kari_curve)

    p = sub.add_parser("symmetrize", parents=[common], help="marginals of a periodic pattern")
    p.add_argument("pattern")
    p.add_argument("--regions", nargs="+", default=["h", "v"])
    p.set_defaults(func=cmd_symmetrize)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    args.out = _Output(None if args.command == "kari-gen" else args.output)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ResourceError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (StructuralError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except VerificationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE


def main():
    sys.exit(run())
