"""Command-line front end.

Every subcommand runs one library operation, prints a short summary on
stdout and, with ``--json-out``, writes a JSON document that records the
argv, the sha256 of every input file and the result.  Output documents are
deterministic: randomized steps take ``--seed`` and nothing time-dependent
is recorded.  Exit status is 0 for a positive verdict, 1 for a negative
verdict or bad input, 2 for usage errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import random
import sys
from pathlib import Path

from . import eppa, generic, ramsey
from .amalgam import AmalgamProblem, PostconditionError, amalgamate_k0, amalgamate_kp
from .iso import embeddings, isomorphism
from .structure import ClassSpec, FinStructure, StructureError, from_document, to_document, validate


class InputError(Exception):
    pass


class _Run:
    """Per-invocation state: hashed inputs and the output document."""

    def __init__(self, args, argv):
        self.args = args
        self.inputs: dict[str, dict] = {}
        self.doc: dict = {"command": args.command, "argv": _recorded_argv(argv)}

    def read_json(self, flag: str, path: str):
        try:
            data = Path(path).read_bytes()
        except OSError as exc:
            raise InputError(f"{flag}: cannot read {path}: {exc.strerror}") from None
        self.inputs[flag] = {"path": path, "sha256": hashlib.sha256(data).hexdigest()}
        try:
            return json.loads(data)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise InputError(f"{flag}: {path} is not JSON: {exc}") from None

    def structure(self, flag: str, path: str, spec: ClassSpec | None = None) -> FinStructure:
        return from_document(self.read_json(flag, path), spec)

    def spec(self, path: str | None, default: ClassSpec) -> ClassSpec:
        if path is None:
            return default
        return ClassSpec.from_json(self.read_json("--spec", path))

    def finish(self, ok: bool, **fields) -> int:
        self.doc.update(fields)
        self.doc["inputs"] = self.inputs
        self.doc["seed"] = self.args.seed
        self.doc["ok"] = ok
        if self.args.json_out:
            _write_json(self.args.json_out, self.doc)
        return 0 if ok else 1


def _recorded_argv(argv) -> list[str]:
    """argv without the output path, so reruns to another file compare equal."""
    out, skip = [], False
    for tok in argv:
        if skip:
            skip = False
        elif tok == "--json-out":
            skip = True
        elif not tok.startswith("--json-out="):
            out.append(tok)
    return out


def _write_json(path: str, doc) -> None:
    text = json.dumps(doc, sort_keys=True, indent=1) + "\n"
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror}") from None


def _int_list(text: str) -> list[int]:
    try:
        out = json.loads(text)
    except json.JSONDecodeError:
        raise argparse.ArgumentTypeError(f"not a JSON integer array: {text!r}") from None
    if not isinstance(out, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in out):
        raise argparse.ArgumentTypeError(f"not a JSON integer array: {text!r}")
    return out


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return value


# -- subcommands --------------------------------------------------------------------


def cmd_validate(run: _Run) -> int:
    a = run.args
    spec = run.spec(a.spec, None) if a.spec else None
    doc = run.read_json("--in", a.input)
    try:
        S = from_document(doc, spec)
    except StructureError as exc:
        print(f"invalid: {exc}")
        return run.finish(False, violations=[["document", str(exc)]])
    report = validate(S, spec)
    print("valid" if report.ok else f"invalid: {report.first()}")
    return run.finish(report.ok, universe=S.universe, violations=[list(v) for v in report.violations])


def cmd_iso(run: _Run) -> int:
    S = run.structure("--a", run.args.a)
    T = run.structure("--b", run.args.b)
    f = isomorphism(S, T)
    print("isomorphic" if f is not None else "not isomorphic")
    return run.finish(f is not None, isomorphism=None if f is None else list(f))


def cmd_embed(run: _Run) -> int:
    A = run.structure("--a", run.args.a)
    C = run.structure("--c", run.args.c)
    found = []
    for e in embeddings(A, C):
        found.append(list(e))
        if not run.args.all:
            break
    print(f"{len(found)} embedding(s)" if found else "no embedding")
    return run.finish(bool(found), embeddings=found)


def cmd_amalgamate(run: _Run) -> int:
    a = run.args
    A = run.structure("--a", a.a)
    B1 = run.structure("--b1", a.b1, A.spec)
    B2 = run.structure("--b2", a.b2, A.spec)
    glue1 = a.glue1 if a.glue1 is not None else list(range(A.universe))
    glue2 = a.glue2 if a.glue2 is not None else list(range(A.universe))
    p = AmalgamProblem(A, B1, B2, glue1, glue2)
    try:
        C = amalgamate_k0(p) if a.cls == "k0" else amalgamate_kp(A.spec, p)
    except PostconditionError as exc:
        print(f"postcondition failed: {exc}", file=sys.stderr)
        return run.finish(False, error=str(exc), certificate=exc.certificate)
    _, b2pos = p.layout()
    if a.out:
        _write_json(a.out, to_document(C))
    print(f"amalgam on {C.universe} points")
    return run.finish(True, structure=to_document(C), b2_positions=b2pos)


def cmd_generic(run: _Run) -> int:
    a = run.args
    spec = run.spec(a.spec, ClassSpec())
    M = run.structure("--from", a.start, spec) if a.start else FinStructure.empty(spec)
    res = generic.saturate(M, a.k, a.budget, palette=a.palette, seed=a.seed)
    if a.out:
        _write_json(a.out, to_document(res.structure))
    print(
        f"{res.structure.universe} points, extension property at level {res.saturation_level}, "
        f"{len(res.missing)} missing extension(s)"
    )
    return run.finish(
        res.certified,
        universe=res.structure.universe,
        saturation_level=res.saturation_level,
        target_level=res.target_level,
        missing=[_missing_doc(x) for x in res.missing[:20]],
        structure=to_document(res.structure),
    )


def _missing_doc(x: generic.MissingExtension) -> dict:
    return {"base": list(x.base), "extension": to_document(x.extension)}


def cmd_check_ep(run: _Run) -> int:
    M = run.structure("--in", run.args.input)
    missing = generic.check_extension_property(M, run.args.k)
    print("extension property holds" if not missing else f"{len(missing)} missing extension(s)")
    return run.finish(not missing, k=run.args.k, missing=[_missing_doc(x) for x in missing[:50]], missing_count=len(missing))


def cmd_enumerate(run: _Run) -> int:
    spec = run.spec(run.args.spec, ClassSpec())
    members = generic.enumerate_members(spec, run.args.size)
    print(f"{len(members)} member(s) of size {run.args.size}")
    return run.finish(True, size=run.args.size, count=len(members), members=[to_document(S) for S in members])


def _maps(raw) -> list[dict]:
    if not isinstance(raw, list):
        raise InputError("maps must be a JSON array")
    out = []
    for m in raw:
        if isinstance(m, dict):
            out.append({int(k): int(v) for k, v in m.items()})
        elif isinstance(m, list):
            out.append({int(x): int(y) for x, y in m})
        else:
            raise InputError("each map is an object or a list of [x, y] pairs")
    return out


def _chis(raw, count: int) -> list[dict]:
    if not isinstance(raw, list) or len(raw) != count:
        raise InputError("chi must be a JSON array with one entry per map")
    return [{int(n): {int(c): int(v) for c, v in perm.items()} for n, perm in chi.items()} for chi in raw]


def cmd_eppa(run: _Run) -> int:
    a = run.args
    doc = run.read_json("--in", a.input)
    A = from_document(doc)
    maps = _maps(run.read_json("--maps", a.maps))
    chis = _chis(run.read_json("--chi", a.chi), len(maps)) if a.chi else None
    if "colors" in doc:
        colors = {int(n): {int(c): int(v) for c, v in cm.items()} for n, cm in doc["colors"].items()}
        CA = eppa.ColoredStructure(A, colors)
        pms = [eppa.PartialMap(m, chis[j] if chis else None) for j, m in enumerate(maps)]
        cert = eppa.permorphism_search(CA, pms, a.bound)
    elif chis:
        pms = [eppa.PartialMap(m, chis[j]) for j, m in enumerate(maps)]
        cert = eppa.permorphism_search(eppa.color_expand(A), pms, a.bound)
    else:
        cert = eppa.eppa_search_k0(A, maps, a.bound)
    print(f"{cert.verdict}: {cert.reason}")
    return run.finish(cert.found, certificate=cert.to_document())


def cmd_eppa_fail(run: _Run) -> int:
    a = run.args
    spec = run.spec(a.spec, ClassSpec({a.n}, max_arity=a.n))
    if a.host:
        host = run.structure("--host", a.host, spec)
    elif a.no_host:
        host = None
    else:
        # a small generic approximation supplies extra points for F to draw on
        host = generic.saturate(FinStructure.empty(spec), 2, 50, seed=a.seed).structure
    M, witness = eppa.eppa_failure_instance(spec, a.n, host)
    cert = eppa.verify_eppa_failure(spec, M, a.n, witness, bound=a.bound, seed=a.seed)
    verdict = "failure certificate" if cert.holds else "inconclusive"
    print(f"{verdict}: {cert.candidates_checked} candidate F checked")
    return run.finish(cert.holds, certificate=cert.to_document(), structure=to_document(M))


def _ramsey_spec(n: int) -> ClassSpec:
    if n == 1:
        return ClassSpec(max_arity=3, allow_point_order=True)
    return ClassSpec({n}, max_arity=2 * n)


def cmd_ramsey_demo(run: _Run) -> int:
    a = run.args
    spec = run.spec(a.spec, _ramsey_spec(a.n))
    W = ramsey.build_witness_B(spec, a.n)
    rng = random.Random(a.seed)
    hosts = ramsey.ramsey_hosts(W, a.count, a.csize, rng)
    results, all_ok = [], True
    for i, C in enumerate(hosts):
        runs = []
        for enum in ramsey.enumerations(C, a.n, a.enumerations, rng):
            col = ramsey.enumeration_coloring(C, W.A, a.n, enum)
            v = ramsey.check_no_mono(C, W, col)
            all_ok &= v.ok and v.opposite_ok
            runs.append(
                {
                    "enumeration": list(enum),
                    "verdict": v.message,
                    "ok": v.ok,
                    "opposite_ok": v.opposite_ok,
                    "copies_of_B": v.copies_of_B,
                    "coloring": {",".join(map(str, k)): c for k, c in sorted(col.colors.items())},
                }
            )
        worst = next((r for r in runs if not r["ok"]), runs[0])
        print(f"C{i}: {C.universe} points, {worst['copies_of_B']} B-copies, {worst['verdict']}")
        results.append({"structure": to_document(C), "runs": runs})
    return run.finish(all_ok, n=a.n, witness=to_document(W.B), hosts=results)


def cmd_convexity(run: _Run) -> int:
    C = run.structure("--in", run.args.input)
    triples = ramsey.forbidden_triple_scan(C)
    convex = ramsey.classes_convex(C)
    if convex != (not triples):
        raise RuntimeError("forbidden-triple scan disagrees with the direct convexity check")
    print("point classes are convex" if convex else f"{len(triples)} forbidden triple(s)")
    return run.finish(convex, convex=convex, forbidden_triples=[list(t) for t in triples])


def cmd_z4(run: _Run) -> int:
    a = run.args
    M = run.structure("--in", a.input)
    found = ramsey.z4_find(M, a.n, limit=a.limit, colored=a.colored, prune=not a.no_prune)
    print(f"{len(found)} Z/4Z-increasing sequence(s)" if found else "no Z/4Z-increasing sequence")
    return run.finish(bool(found), n=a.n, sequences=[[list(b) for b in s.blocks] for s in found])


# -- parser ----------------------------------------------------------------------------


def _global_flags(defaults: bool) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    # subparsers get SUPPRESS defaults so flags before the subcommand survive
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    p.add_argument("--seed", type=_seed, default=d(0), help="seed for randomized steps")
    p.add_argument("--threads", type=_positive, default=d(1), help="accepted for compatibility; work runs on one thread")
    p.add_argument("--json-out", default=d(None), help="write the result document here")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fraisse-eq",
        description="Classes of structures with equivalence relations on n-subsets.",
        parents=[_global_flags(True)],
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    flags = _global_flags(False)

    def add(name, func, help):
        p = sub.add_parser(name, help=help, parents=[flags])
        p.set_defaults(func=func)
        return p

    p = add("validate", cmd_validate, "check a structure document against its class")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--spec")

    p = add("iso", cmd_iso, "decide isomorphism of two structures")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)

    p = add("embed", cmd_embed, "find embeddings of A into C")
    p.add_argument("--a", required=True)
    p.add_argument("--c", required=True)
    p.add_argument("--all", action="store_true", help="list every embedding")

    p = add("amalgamate", cmd_amalgamate, "amalgamate B1 and B2 over A")
    p.add_argument("--class", dest="cls", choices=["k0", "kp"], default="kp")
    p.add_argument("--a", required=True)
    p.add_argument("--b1", required=True)
    p.add_argument("--b2", required=True)
    p.add_argument("--glue1", type=_int_list)
    p.add_argument("--glue2", type=_int_list)
    p.add_argument("--out", help="write the amalgam here")

    p = add("generic", cmd_generic, "saturate towards the extension property")
    p.add_argument("--spec")
    p.add_argument("--from", dest="start", help="start from this structure instead of the empty one")
    p.add_argument("--k", type=_positive, default=3)
    p.add_argument("--budget", type=_positive, default=200)
    p.add_argument("--palette", type=_positive, default=3)
    p.add_argument("--out")

    p = add("check-ep", cmd_check_ep, "list missing one-point extensions")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--k", type=_positive, default=3)

    p = add("enumerate", cmd_enumerate, "class members of a given size up to isomorphism")
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--spec")

    p = add("eppa", cmd_eppa, "extend partial isomorphisms to automorphisms of a finite B")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--maps", required=True)
    p.add_argument("--chi")
    p.add_argument("--bound", type=int)

    p = add("eppa-fail", cmd_eppa_fail, "certify that a partial isomorphism has no finite extension")
    p.add_argument("--spec")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--bound", type=int, default=8, help="extra points of F beyond the witness")
    p.add_argument("--host", help="structure joined after the witness")
    p.add_argument("--no-host", action="store_true")

    p = add("ramsey-demo", cmd_ramsey_demo, "color copies of A so that no copy of B is monochromatic")
    p.add_argument("--spec")
    p.add_argument("--n", type=_positive, default=1)
    p.add_argument("--csize", type=int, default=12)
    p.add_argument("--count", type=_positive, default=50)
    p.add_argument("--enumerations", type=_positive, default=3)

    p = add("convexity", cmd_convexity, "compare the forbidden-triple scan with class convexity")
    p.add_argument("--in", dest="input", required=True)

    p = add("z4", cmd_z4, "search Z/4Z-increasing block sequences")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--limit", type=_positive)
    p.add_argument("--colored", action="store_true")
    p.add_argument("--no-prune", action="store_true")
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    run = _Run(args, argv)
    try:
        return args.func(run)
    except (InputError, StructureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
