"""Smoke test for the oddsbound_py extension module."""

import math

import oddsbound_py as ob


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    c = ob.bound_constants()
    assert close(c["z"], 1.19967864, 1e-8)
    assert close(c["llc"], 0.6627, 1e-4)
    assert close(c["or_star"], 121.354, 1e-3)
    assert close(ob.series_radius(), c["llc"], 1e-14)
    assert ob.LLC == c["llc"]

    t = ob.TwoByTwoTable(20, 10, 10, 20)
    assert t.odds_ratio() == 4.0
    assert close(t.t_statistic(), 2.531015, 1e-5)
    assert close(math.sqrt(t.total()) * math.log(4.0) / t.sigma_hat(), t.t_statistic(), 1e-12)
    assert repr(ob.TwoByTwoTable.parse("1, 2, 3, 4")) == "TwoByTwoTable(1,2,3,4)"
    try:
        ob.TwoByTwoTable.parse("1,2,3")
    except ValueError:
        pass
    else:
        raise AssertionError("malformed table accepted")

    r = ob.optimal_risk(c["or_star"])
    assert close(r.gamma(), c["llc"], 1e-12)
    assert close(r.relative_risk() ** 2, r.odds_ratio(), 1e-9)
    back = r.to_cohort().to_risk()
    assert close(back.r_de, r.r_de, 1e-12)
    assert close(ob.gamma_max(4.0), 0.3267527144895157, 1e-14)

    report = ob.verify_bound(20000, seed=7)
    assert report["violations"] == 0
    assert report["max_gamma_observed"] <= c["llc"]

    s = ob.kepler_solve(1.0, 0.5)
    assert s["residual"] <= 1e-12 and s["method"] == "newton"
    assert close(ob.mean_anomaly(s["eccentric_anomaly"], 0.5), 1.0, 1e-11)
    series = ob.kepler_series(math.pi / 2, 0.3, 30)
    newton = ob.kepler_solve(math.pi / 2, 0.3)
    assert close(series["eccentric_anomaly"], newton["eccentric_anomaly"], 1e-8)
    rows = ob.divergence_table(math.pi / 2, 0.8, 30)
    assert any(b[2] > a[2] for a, b in zip(rows, rows[1:]))

    assert close(ob.flattest_prior(2.0, 0.025, math.log(2.0) / ob.LLC), 0.114339, 1e-5)
    assert close(ob.sigma_wm_pathway(4.0, 0.5)["sigma"], 4.5, 1e-12)
    assert close(ob.z_to_p(ob.p_to_z(0.025)), 0.025, 1e-12)

    print("smoke test passed")


if __name__ == "__main__":
    main()
