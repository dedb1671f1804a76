"""Smoke test for the stein_verify_py extension module."""

import json
import math

import stein_verify_py as sv


def main():
    ball = sv.ConvexSet.ball([0.0, 0.0], 1.0)
    nearest, dist = ball.project([2.0, 0.0])
    assert abs(dist - 1.0) < 1e-12 and abs(nearest[0] - 1.0) < 1e-12
    assert ball.contains([0.5, 0.0])
    assert ball.in_dilation([1.4, 0.0], 0.5)
    assert not ball.in_erosion([0.0, 0.0], 1.5)

    hs = sv.ConvexSet.half_space([1.0, 0.0], 0.0)
    field = sv.SteinField(hs, 1.0)
    assert field([0.5, 7.0]) == [0.5, 0.0]

    assert sv.psi(0.25) == 0.875
    assert abs(sv.lemma33_linear([1.0]) - math.sqrt(2 / math.pi)) < 1e-12
    assert abs(sv.lemma33_cubic_constant() - 1.51001) < 5e-6
    assert sv.lemma34_mixed([1.0, 0.0], [0.0, 1.0]) <= sv.lemma34_bound([1.0, 0.0], [0.0, 1.0])
    assert abs(sv.gamma("rademacher", 4, 400) - 0.4) < 1e-12

    e = sv.gaussian_concentration(sv.ConvexSet.half_space([1.0], 0.0), 0.1, 0.1, 100_000, 7)
    exact = math.erf(0.1 / math.sqrt(2))
    assert e["ci_low"] <= exact <= e["ci_high"], e
    assert e["verdict"] == "pass"

    d = sv.discrepancy("rademacher", 1, 100, "halfspaces", 100_000, 7)
    assert d["verdict"] == "vacuous" and d["sup_hat"] > 0.03, d

    record = json.loads(
        sv.run_config(
            'experiment = "gaussian-concentration"\nk = 2\nn = 1\nfamily = "gaussian"\n'
            "samples = 10000\nseed = 1\neps = [0.1]\neps2 = [0.1]\n"
        )
    )
    assert all(r["verdict"] == "pass" for r in record["rows"]), record["rows"]

    print(f"stein_verify_py {sv.__version__}: smoke test ok")


if __name__ == "__main__":
    main()
