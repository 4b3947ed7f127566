"""Smoke test for the causalbound_py extension module.

Build and install it first, for example with
``pip install --no-build-isolation ./crates/py`` (needs maturin).
"""

import json

import causalbound_py as cb


def main():
    problems = cb.builtin_problems()
    assert "two_instruments.cb" in problems

    report = cb.validate(problems["two_instruments.cb"])
    assert report["passed"] and report["tight"], report

    ternary = cb.compile(problems["confounded_ternary.cb"])
    assert len(ternary) == 3
    rd = ternary[0]
    assert rd.vertex_counts == (1, 1)
    dist = {"p00": "3/10", "p11": "2/5", "p10": "1/5", "p01": "1/10", "p20": 0, "p21": 0}
    assert rd.evaluate(dist) == ("-3/10", "7/10"), rd.evaluate(dist)

    again = cb.Bound.from_json(rd.to_json())
    assert again.lower == rd.lower and again.upper == rd.upper
    assert json.loads(rd.to_json())["query"] == rd.query

    measurement = cb.compile(problems["measurement_error.cb"])[0]
    equal = {"p0_0": "1/3", "p1_0": "2/3", "p0_1": "1/3", "p1_1": "2/3"}
    assert measurement.evaluate(equal) == ("-1", "1")

    try:
        rd.evaluate({"p00": 1})
    except ValueError as e:
        assert "no probability" in str(e)
    else:
        raise AssertionError("missing probabilities were accepted")

    assert cb.verify(problems["single_instrument.cb"], trials=20) == [0]
    csv = cb.simulate(reps=2, seed=1)
    assert csv.splitlines()[0].startswith("rep,")

    print(rd.to_text())
    print("smoke test passed")


if __name__ == "__main__":
    main()
