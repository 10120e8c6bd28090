"""Smoke test for the stackdist_py extension.

Uses an installed module when available; otherwise builds the extension
with cargo and loads it from a temporary directory.
"""

import importlib
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent
KERNELS = ROOT / "crates" / "core" / "kernels"


def load_module():
    try:
        return importlib.import_module("stackdist_py")
    except ImportError:
        pass
    subprocess.run(
        ["cargo", "build", "--release", "-p", "stackdist-py", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    lib = ROOT / "target" / "release" / "libstackdist_py.so"
    out = pathlib.Path(tempfile.mkdtemp())
    shutil.copy(lib, out / "stackdist_py.so")
    sys.path.insert(0, str(out))
    return importlib.import_module("stackdist_py")


def main():
    sd = load_module()
    running = (KERNELS / "running.scop.dsl").read_text()

    report = sd.analyze(running, line_size=4, caches=[8])
    total = report["counts"]["total"]["levels"][0]
    assert (total["compulsory"], total["capacity"]) == (4, 2), total
    assert report["pieces"] == 1

    sim = sd.simulate(running, line_size=4, caches=[8])
    assert sim["total"] == report["counts"]["total"], sim
    assert sd.verify(running, line_size=4, caches=[8]) == []

    pieces = {(d["statement"], d["access"]): d["pieces"] for d in sd.distances(running, line_size=4)}
    assert pieces[("S1", 0)] == ["{ S1[j] -> j + 1 : j <= 3 and j >= 0 }"], pieces

    matmul = (KERNELS / "matmul.scop.dsl").read_text()
    assert sd.verify(matmul, defines={"N": 16}) == []
    assert sd.parse_size("32K") == 32768

    for bad, kwargs in [("array A[4];\nfor i = 0 .. 3 { S0: A[i] = ; }", {}), (running, {"caches": [100]})]:
        try:
            sd.analyze(bad, **kwargs)
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
