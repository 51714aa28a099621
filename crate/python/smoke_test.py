#!/usr/bin/env python3
"""Smoke test for the groupies_rs extension module.

Build the extension first:

    cargo build -p groupies-py

then run this script with any Python 3. It locates the freshly built
cdylib, stages it under the importable name, and checks a handful of
frozen facts end to end.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]


def stage_module() -> Path:
    candidates = [
        ROOT / "target" / profile / "libgroupies_rs.so"
        for profile in ("debug", "release")
    ]
    built = [p for p in candidates if p.exists()]
    if not built:
        sys.exit("build the extension first: cargo build -p groupies-py")
    newest = max(built, key=lambda p: p.stat().st_mtime)
    stage = Path(tempfile.mkdtemp(prefix="groupies_rs_"))
    shutil.copy2(newest, stage / "groupies_rs.so")
    return stage


sys.path.insert(0, str(stage_module()))
import groupies_rs  # noqa: E402


def check(name: str, condition: bool, detail: str = "") -> None:
    if not condition:
        sys.exit(f"FAIL {name} {detail}")
    print(f"PASS {name}" + (f" ({detail})" if detail else ""))


spec = groupies_rs.Spec([1, 2], p=1.0)
star = spec.sample(seed=7)
check("star edges", star.edges() == [(0, 1), (0, 2)], str(star.edges()))
check("star degrees", [star.degree(v) for v in range(3)] == [2, 1, 1])

report = star.report()
check(
    "star report",
    report["total"] == 1 and report["per_part"] == [1, 0],
    str(report),
)

text = star.to_text()
check(
    "round trip",
    groupies_rs.Graph.from_text(text).edges() == star.edges(),
)

tri = groupies_rs.Spec([1, 1, 1], p=0.5)
dist = tri.exact_distribution("strict")
check("exact mean 3/8", dist["mean"] == 0.375, str(dist["mean"]))
check(
    "exact distribution",
    abs(dist["n_dist"][0] - 0.625) < 1e-12 and abs(dist["n_dist"][1] - 0.375) < 1e-12,
    str(dist["n_dist"]),
)

a = tri.sample(seed=3).edges()
b = tri.sample(seed=3).edges()
check("deterministic sampling", a == b)

trials = 40_000
mc = tri.experiment(trials=trials, seed=1)
se = math.sqrt(dist["variance"] / trials)
check(
    "monte carlo within 4 SE of exact",
    abs(mc["mean_N"] - 0.375) <= 4 * se,
    f"mean {mc['mean_N']:.5f}, 4SE {4 * se:.5f}",
)

unbalanced = groupies_rs.Spec([200, 300, 500], p=0.5)
check("heuristic 1,1,0", unbalanced.heuristic() == ["1", "1", "0"])
check("expected degree", unbalanced.expected_degree(0) == 400.0)

check("hoeffding bound cap", groupies_rs.hoeffding_bound(100, 0.0) == 1.0)
check(
    "hoeffding bound decays",
    groupies_rs.hoeffding_bound(100, 30.0) < 1e-7,
    f"{groupies_rs.hoeffding_bound(100, 30.0):.3g}",
)

matrix = groupies_rs.Spec([2, 3], matrix=[[0.0, 0.25], [0.25, 0.0]])
check("matrix spec expected edges", matrix.expected_edges() == 1.5)

print("all smoke tests passed")
