"""Smoke test for the `witness` extension module.

Builds the module with cargo unless it is already importable, then exercises
each binding once. Run from anywhere: `python3 python/smoke_test.py`.
"""

import importlib
import json
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent
S1 = ROOT / "crates/core/tests/data/s1"


def load_module():
    try:
        return importlib.import_module("witness")
    except ImportError:
        pass
    subprocess.run(
        ["cargo", "build", "-p", "witness-py", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    built = ROOT / "target/debug/libwitness.so"
    dest = pathlib.Path(tempfile.mkdtemp()) / "witness.so"
    shutil.copy(built, dest)
    sys.path.insert(0, str(dest.parent))
    return importlib.import_module("witness")


def main():
    w = load_module()

    assert w.ochiai(0) == 1.0
    assert w.ochiai(3) == 0.5
    assert w.jaccard_distance({"a.c": [1, 2]}, {"a.c": [2, 3]}) == 1 - 1 / 3

    ranking = w.localize({"a.c": [1], "b.c": [1]}, [{"b.c": [1]}])
    assert ranking[0][0] == "a.c" and ranking[0][2] == 1, ranking

    failing = (S1 / "failing.c").read_text()
    analysis = json.loads(w.analyze(failing))
    assert analysis["target"]["variables"], analysis["target"]

    shift = "int main(void) { int x = 1 << 31; return x; }\n"
    assert json.loads(w.check(shift))["verdict"] != "valid"
    dropped = failing.replace('  printf("%d\\n", a);\n', "")
    assert json.loads(w.check(dropped, failing))["verdict"] == "oracle_invalid"

    with tempfile.TemporaryDirectory() as out:
        report = json.loads(w.run(str(S1 / "config.json"), out_dir=out))
    assert report["faulty_ranks"]["gcc/tree-ssa-phiopt.c"] == 1, report["faulty_ranks"]

    try:
        w.analyze("int main( {")
    except ValueError:
        pass
    else:
        raise AssertionError("unparseable source was accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
