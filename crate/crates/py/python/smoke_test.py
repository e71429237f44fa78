"""Smoke test for the stripnet extension module."""

import math
import os
import tempfile

import stripnet

SANITY = """
sim.nodes = 2
sim.width = 200
sim.height = 10
sim.mobility = static
sim.positions = 0:0; 100:0
sim.duration = 100
traffic.flows = 0-1
traffic.random_flows = 0
traffic.interval = 10
"""


def main():
    assert stripnet.derive_m(2.0, 1.0, 3.0) == 1.0

    strip = stripnet.StripModel(250.0, 4, 20.0, 4.0, 0.01)
    report = strip.report()
    assert len(report.per_segment_direct) == 3
    assert all(abs(p - 0.5) < 1e-6 for p in report.per_segment_direct)
    assert abs(report.chain - 0.0625) < 1e-9

    assert abs(stripnet.stream_intensity(2.0, 1.0, 60.0, 10.0) - 20.0) < 1e-6
    assert abs(sum(stripnet.segment_pmf(3.0, n) for n in range(60)) - 1.0) < 1e-12
    assert abs(stripnet.segment_pgf(3.0, 0.5) - math.exp(-1.5)) < 1e-12

    kin = stripnet.KinematicsConfig(10.0, 20.0, 5.0, 100.0, 50.0, 900.0)
    same = kin.report("same")
    assert same.speed_levels == 2 and same.t_comm_diff == 25.0
    assert same.p_link_raw < 0.0 and same.p_link == 0.0
    flat = stripnet.KinematicsConfig(15.0, 15.0, 5.0, 100.0, 50.0, 900.0).report("opposite")
    assert flat.degenerate and flat.p_link == 0.0

    est = stripnet.estimate_direct_prob(1.0, 1.0, 1, samples=100_000, seed=3)
    assert abs(est.z_score(0.5)) <= 3.0

    assert "aodv_mod" in stripnet.protocol_names()
    metrics = stripnet.simulate(SANITY, protocol="aodv")
    assert metrics.throughput == 51.2, metrics
    again = stripnet.simulate(SANITY, protocol="aodv")
    assert (again.throughput, again.e2ed, again.nrl) == (metrics.throughput, metrics.e2ed, metrics.nrl)

    text = stripnet.analytic_report("kinematics.horizon = 900\n")
    assert "P_link = 0" in text

    with tempfile.TemporaryDirectory() as tmp:
        out = os.path.join(tmp, "runs.csv")
        trace = os.path.join(tmp, "trace.tsv")
        stripnet.sim_to_csv(SANITY, out, protocol="dsr", trace=trace)
        with open(out) as f:
            lines = f.read().splitlines()
        assert lines[0].startswith("protocol,axis,level,replication,seed")
        assert lines[1].startswith("dsr,single,2,0,1,")
        assert os.path.getsize(trace) > 0

    for bad in (lambda: stripnet.simulate(SANITY, protocol="olsr"),
                lambda: stripnet.StripModel(-1.0, 4, 20.0, 4.0, 0.01),
                lambda: stripnet.analytic_report("strip.bogus = 1\n")):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")

    print("stripnet smoke test passed")


if __name__ == "__main__":
    main()
