"""Smoke test for the beliefnav Python module.

Build and install first:  pip install --no-build-isolation -e crates/python
"""

import tempfile
from pathlib import Path

import beliefnav


def main() -> None:
    office = beliefnav.office_map()
    assert len(office) == 80
    assert office.area("124")["category"] == "room"

    data = beliefnav.generate(office, k=10, seed=0)
    assert len(data) == 3200
    assert dict(data.counts()) == {"dummy": 800, "proximity": 800, "directional": 800, "precise": 800}

    model = beliefnav.train(office, data, epochs=10, seed=0)
    report = model.report
    print("holdout:", {k: round(v, 4) if isinstance(v, float) else v for k, v in report.items()})
    assert report["area_accuracy"] >= 0.85

    trace = model.ground(office, "go to the meeting room near the north exit")
    print("steps:", trace.steps)
    print("ranked:", trace.ranked(5))
    assert len(trace) == 3
    assert abs(sum(trace.belief(2)) - 1.0) < 1e-6
    assert model.ground(office, "go to room 124").goal == "124"
    assert model.parse("go to the printer near room 124") == ["the printer", "near", "room 124"]

    try:
        model.ground(office, "go to the area between yosemite and hardware")
    except ValueError as e:
        print("rejected:", e)
    else:
        raise AssertionError("'between' should be rejected")

    route = beliefnav.plan(office, "305", trace.goal)
    print("plan:", " -> ".join(route))
    assert route[0] == "305" and route[-1] == trace.goal

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "model.json"
        model.save(path)
        again = beliefnav.Model.load(path)
        assert again.ground(office, "go to room 124").ranked(3) == model.ground(office, "go to room 124").ranked(3)

    print("ok")


if __name__ == "__main__":
    main()
