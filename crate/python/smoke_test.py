"""Smoke test for the dsb_lab extension module.

Build first:  pip install --no-build-isolation ./crates/py   (or maturin develop)
"""

import math

import dsb_lab


def main():
    model = dsb_lab.Model("DDP", alpha=1.0, sticks=30)
    assert model.variant == "DDP" and model.num_sticks == 30

    points = [[0.0], [0.25], [0.5], [1.0]]
    path = model.sample_path(points, seed=42)
    assert len(path) == 4
    for j in range(len(path)):
        w = path.weights(j)
        assert len(w) == 30 and abs(sum(w) - 1.0) < 1e-12
        assert len(path.atoms(j)) == 30
    again = model.sample_path(points, seed=42)
    assert path.weights(3) == again.weights(3)
    assert 0.0 < path.tv_distance(0, 3) <= 2.0
    assert path.to_csv().startswith("loc_index,")

    nodes, dens = path.mixture_density(0, "gaussian_loc", 0.5, -10.0, 10.0, n=2001)
    h = nodes[1] - nodes[0]
    mass = h * (sum(dens) - 0.5 * (dens[0] + dens[-1]))
    assert abs(mass - 1.0) < 1e-6, mass

    # N(0,1) vs N(1,1): H^2 = 1 - exp(-1/8), KL = 1/2
    lo, hi, n = -12.0, 12.0, 4001
    xs = [lo + (hi - lo) * i / (n - 1) for i in range(n)]
    p = [math.exp(-x * x / 2) / math.sqrt(2 * math.pi) for x in xs]
    q = [math.exp(-(x - 1) ** 2 / 2) / math.sqrt(2 * math.pi) for x in xs]
    assert abs(dsb_lab.hellinger(lo, hi, p, q) - math.sqrt(1 - math.exp(-1 / 8))) < 1e-6
    assert abs(dsb_lab.kl_divergence(lo, hi, p, q) - 0.5) < 1e-6
    assert dsb_lab.l1_distance(lo, hi, p, p) == 0.0

    assert dsb_lab.decay_check("gaussian_loc", 0.5, 1.0, 1e-3)["passed"]
    assert not dsb_lab.decay_check("beta_free", 0.5, 1.0, 1e-3)["passed"]

    report = dsb_lab.probe("tv_contrast", dsb_lab.Model("DDP", sticks=20), [0.5, 0.25], 100, seed=7)
    assert set(report) >= {"probe", "config_digest", "rows", "verdicts", "seed", "runtime_seconds"}
    assert report["probe"] == "tv_contrast"

    try:
        dsb_lab.Model("wDDP", alpha=0.0)
    except ValueError:
        pass
    else:
        raise AssertionError("alpha = 0 accepted")

    print(f"dsb_lab {dsb_lab.__version__}: smoke test passed")


if __name__ == "__main__":
    main()
