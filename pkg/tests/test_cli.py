import json
import random

import pytest

from fraisse_eq.cli import main
from fraisse_eq.generic import random_member
from fraisse_eq.ramsey import plant_z4
from fraisse_eq.structure import K0, ClassSpec, FinStructure, from_classes, relabel, to_document

LINE = ClassSpec(max_arity=1, allow_point_order=True)


def write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def run(tmp_path, *argv):
    out = tmp_path / "out.json"
    code = main([*argv, "--json-out", str(out)])
    return code, json.loads(out.read_text()) if out.exists() else None


def test_validate(tmp_path):
    S = random_member(K0, 4, random.Random(1))
    code, doc = run(tmp_path, "validate", "--in", write(tmp_path / "s.json", to_document(S)))
    assert code == 0 and doc["ok"] and doc["universe"] == 4
    assert doc["inputs"]["--in"]["sha256"]


def test_validate_reports_bad_documents(tmp_path):
    bad = to_document(FinStructure.uniform(K0, 2))
    bad["relations"]["1"] = [0]
    code, doc = run(tmp_path, "validate", "--in", write(tmp_path / "s.json", bad))
    assert code == 1 and not doc["ok"] and doc["violations"]


def test_iso_and_embed(tmp_path, capsys):
    S = random_member(K0, 4, random.Random(2))
    a = write(tmp_path / "a.json", to_document(S))
    b = write(tmp_path / "b.json", to_document(relabel(S, [2, 0, 3, 1])))
    code, doc = run(tmp_path, "iso", "--a", a, "--b", b)
    assert code == 0 and doc["isomorphism"] is not None
    code, doc = run(tmp_path, "embed", "--a", a, "--c", b, "--all")
    assert code == 0 and len(doc["embeddings"]) >= 1


def test_amalgamate_writes_a_structure(tmp_path):
    A = FinStructure.uniform(K0, 1)
    B1 = from_classes(K0, 2, {1: [[(0,), (1,)]]})
    B2 = from_classes(K0, 2, {1: [[(0,)], [(1,)]]})
    paths = [write(tmp_path / f"{n}.json", to_document(S)) for n, S in (("a", A), ("b1", B1), ("b2", B2))]
    target = tmp_path / "c.json"
    code, doc = run(
        tmp_path, "amalgamate", "--class", "k0", "--a", paths[0], "--b1", paths[1], "--b2", paths[2],
        "--glue1", "[0]", "--glue2", "[0]", "--out", str(target),
    )
    assert code == 0
    assert main(["validate", "--in", str(target)]) == 0


def test_generic_and_extension_check(tmp_path):
    spec = write(tmp_path / "spec.json", ClassSpec({3}).to_json())
    target = tmp_path / "m.json"
    code, doc = run(tmp_path, "generic", "--spec", spec, "--k", "2", "--budget", "60", "--out", str(target))
    assert code == 0 and doc["ok"]
    code, _ = run(tmp_path, "check-ep", "--in", str(target), "--k", "2")
    assert code == 0


def test_enumerate(tmp_path):
    code, doc = run(tmp_path, "enumerate", "--size", "3")
    assert code == 0 and doc["ok"]


def test_eppa_on_a_swap(tmp_path):
    S = FinStructure.uniform(ClassSpec(max_arity=2), 2)
    maps = write(tmp_path / "maps.json", [{"0": 1}])
    code, doc = run(tmp_path, "eppa", "--in", write(tmp_path / "s.json", to_document(S)), "--maps", maps)
    assert code == 0 and doc["certificate"]["verdict"] == "found"


def test_eppa_failure_certificate(tmp_path):
    code, doc = run(tmp_path, "eppa-fail", "--n", "3", "--bound", "8")
    assert code == 0 and doc["certificate"]["verdict"] == "failure"


def test_ramsey_demo(tmp_path, capsys):
    code, doc = run(tmp_path, "ramsey-demo", "--n", "1", "--csize", "10", "--count", "5")
    assert code == 0
    assert len(doc["hosts"]) == 5
    verdicts = [r["verdict"] for h in doc["hosts"] for r in h["runs"]]
    assert set(verdicts) == {"no monochromatic B-copy"}
    assert len(capsys.readouterr().out.strip().splitlines()) == 5


def test_output_is_deterministic(tmp_path):
    argv = ["ramsey-demo", "--n", "1", "--csize", "9", "--count", "3", "--seed", "7"]
    main([*argv, "--json-out", str(tmp_path / "x.json")])
    main(["--json-out", str(tmp_path / "y.json"), *argv])
    assert (tmp_path / "x.json").read_bytes() == (tmp_path / "y.json").read_bytes()


def test_convexity_verdicts(tmp_path):
    good = FinStructure.from_labels(LINE, 3, {1: [0, 0, 1]}, point_order=[0, 1, 2])
    bad = FinStructure.from_labels(LINE, 3, {1: [0, 1, 0]}, point_order=[0, 1, 2])
    code, doc = run(tmp_path, "convexity", "--in", write(tmp_path / "g.json", to_document(good)))
    assert code == 0 and doc["forbidden_triples"] == []
    code, doc = run(tmp_path, "convexity", "--in", write(tmp_path / "b.json", to_document(bad)))
    assert code == 1 and doc["forbidden_triples"] == [[0, 1, 2]]


def test_z4_finds_the_plant(tmp_path):
    M, blocks = plant_z4(ClassSpec({3}, max_arity=6), 3)
    code, doc = run(tmp_path, "z4", "--in", write(tmp_path / "m.json", to_document(M)), "--n", "3")
    assert code == 0 and doc["sequences"] == [[list(b) for b in blocks]]


def test_usage_error_exits_two():
    with pytest.raises(SystemExit) as err:
        main(["no-such-command"])
    assert err.value.code == 2


def test_missing_file_exits_one(tmp_path, capsys):
    assert main(["validate", "--in", str(tmp_path / "absent.json")]) == 1
    assert capsys.readouterr().err.startswith("error:")
