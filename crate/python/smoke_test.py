"""Smoke test for the hgot_py extension module.

Build and install first, e.g.
    maturin build --release -m crates/python/Cargo.toml -o dist && pip install dist/hgot_py-*.whl
then run from the repository root:
    python3 python/smoke_test.py
"""

import math
import pathlib
import sys
import tempfile

import hgot_py

ROOT = pathlib.Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "crates" / "core" / "tests" / "fixtures" / "todd_boehly"


def check_replay():
    pipeline = hgot_py.Pipeline(mode="replay", fixtures=str(FIXTURES))
    ans = pipeline.ask(hgot_py.WORKED_EXAMPLE_QUESTION)
    assert ans.answer == "President", ans
    assert ans.confidence == 1.0, ans.confidence
    assert ans.edges == [(1, 2)], ans.edges
    assert ans.steps[1][0] == "What was Todd Boehly's former position at Guggenheim Partners?"
    assert ans.to_dot().startswith("digraph hgot {")
    assert '"answer":"President"' in ans.to_json()

    try:
        pipeline.ask("Who wrote Hamlet?")
    except hgot_py.ProviderFailure:
        pass
    else:
        raise AssertionError("a question without fixtures must fail in replay mode")

    try:
        hgot_py.Pipeline(mode="replay")
    except hgot_py.ConfigurationError:
        pass
    else:
        raise AssertionError("replay without fixtures must be rejected")


def check_scoring():
    answer, ci = hgot_py.vote(["Chairman", "President", "president."], [0.5, 0.4, 0.4])
    assert answer == "President" and math.isclose(ci, 0.8 / 1.3), (answer, ci)
    assert hgot_py.normalize_citation_marks("A [1] b. C d [2].") == "A b [1]. C d [2]."
    assert hgot_py.parse_dependency_dsl("Step 1 -> (Step 2 and Step 3)") == [(1, 2), (1, 3)]
    assert hgot_py.parse_dependency_description("None") == []


def check_metrics():
    assert hgot_py.exact_match("the president", ["President"]) == 1.0
    assert math.isclose(
        hgot_py.f1("oklahoma agricultural college", ["oklahoma agricultural and mechanical college"]), 0.75
    )
    point, em, f1 = hgot_py.grid_search_lookup()
    assert point == (0.2, 0.4, 0.4, 0.2, 0.55, 0.25) and em == 31.45 and f1 == 42.17
    long, medium, short = hgot_py.stratify([" ".join(["w"] * n) for n in range(1, 1001)], "fever")
    assert (len(long), len(medium), len(short)) == (15, 970, 15)


def check_seed():
    with tempfile.TemporaryDirectory() as d:
        count = hgot_py.seed_fixtures(d)
        assert count == len(list(FIXTURES.glob("*.json"))), count


def main():
    for check in (check_replay, check_scoring, check_metrics, check_seed):
        check()
        print(f"ok  {check.__name__}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
