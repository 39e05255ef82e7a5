"""End-to-end smoke checks for the offmd extension module.

Runs under plain `python3 test_smoke.py` (ctest) or pytest.
"""

import math
import sys

import offmd


def tiny_params(iterations=20, interval=5):
    p = offmd.SimParams()
    p.unit_cells = (4, 4, 4)
    p.n_iterations = iterations
    p.reneigh_interval = interval
    return p


def test_lattice_and_kernels():
    p = tiny_params()
    x, v, gid = offmd.create_lattice(p)
    assert len(x) == p.total_atoms() == 256
    assert sorted(gid) == list(range(256))
    # fcc positions land on half-lattice-constant multiples
    a = p.lattice_constant()
    for pos in x[:16]:
        for c in pos:
            assert abs(c / (a / 2) - round(c / (a / 2))) < 1e-9
    # lattice momentum is zeroed
    drift = [sum(vi[k] for vi in v) for k in range(3)]
    assert max(abs(d) for d in drift) < 1e-10

    total, counts = offmd.neighbor_build(p)
    assert total == sum(counts) and len(counts) == 256
    assert len(set(counts)) == 1  # pristine fcc: identical environments

    forces, pe = offmd.force_compute(p)
    assert pe < 0.0
    assert max(abs(c) for f in forces for c in f) < 1e-9  # equilibrium lattice

    assert list(offmd.wrap_periodic((-0.5, 0.0, 21.0), (20.0, 20.0, 20.0))) == [19.5, 0.0, 1.0]


def test_runs_agree_across_modes():
    p = tiny_params()
    s = offmd.RunSetup()
    s.n_nodes = 2
    s.offload_throttle = 1.0

    base = offmd.run_baseline(p, s)
    sync = offmd.run_offpath(p, s, sync_debug=True)
    off = offmd.run_offpath(p, s)

    assert base.mode == "baseline" and off.mode == "offpath"
    assert base.n_atoms == off.n_atoms == 256
    assert list(base.digests) == list(sync.digests)
    assert len(base.digests) == p.n_iterations + 1
    for r in (base, sync, off):
        assert r.conservation[-1].n_atoms == 256
        assert max(abs(c) for c in r.conservation[-1].momentum) < 1e-10
        assert r.timing.t_total > 0.0
    # same initial state, same first rebuild epoch
    assert off.thermo[0].temperature == base.thermo[0].temperature


def test_analysis_surface():
    assert abs(offmd.peak_ratio(656.6, 2, 80.0) - 16.415) < 1e-12
    assert abs(offmd.compute_temperature(3.0 * 256, 256) - 1.0) < 1e-15
    assert math.isclose(offmd.improvement(10.0, 8.0), 0.2, rel_tol=1e-15)
    ref = [offmd.ThermoSample(i, 1.0) for i in range(0, 101, 10)]
    test = [offmd.ThermoSample(i, 1.0 + 0.001 * i) for i in range(0, 101, 10)]
    rep = offmd.compute_tdr(test, ref, 1.0)
    assert abs(rep.alpha - 0.001) < 1e-12
    assert rep.passed()

    try:
        offmd.compute_temperature(1.0, 0)
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError for zero atoms")

    p = tiny_params()
    p.r_cut = -1.0
    try:
        p.validate()
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError for negative cutoff")


def main():
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"ok {name}")
    print("smoke tests passed")


if __name__ == "__main__":
    sys.exit(main())
