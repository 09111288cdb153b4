import json

import numpy as np
import pytest

import vesselsynth as vs


def test_generate_and_score():
    mask, manifest = vs.generate_sample(size=128, depth=3, seed=4)
    assert mask.shape == (128, 128)
    assert mask.dtype == np.uint8
    assert set(np.unique(mask)) <= {0, 1}
    assert manifest["seed"] == 4
    again, _ = vs.generate_sample(size=128, depth=3, seed=4)
    assert np.array_equal(mask, again)

    m = vs.evaluate_pair(mask, mask)
    assert m["iou"] == 1.0
    assert m["mse"] == 0.0
    assert abs(m["ssim"] - 1.0) < 1e-9
    assert m["cr_connected"] == 1.0


def test_fit_round_trip():
    mask, _ = vs.generate_sample(size=128, depth=3, seed=9)
    rendered, report = vs.fit(mask, order=3, budget=200)
    assert rendered.shape == mask.shape
    assert report["iou"] == pytest.approx(vs.iou(rendered, mask), abs=0)
    assert report["iou"] > 0.8
    assert all(c["order"] == 3 for c in report["curves"])
    with pytest.raises(ValueError):
        vs.fit(mask, order=7)


def test_geometry_and_schedule():
    pts = [(0, 0), (0, 1), (1, 1), (1, 0)]
    assert vs.bezier_point(pts, 0.5) == pytest.approx((0.5, 0.75))
    assert vs.curvature([(0, 0), (1, 1), (2, 2), (3, 3)], 0.5) == 0.0
    betas, abar, sigma = vs.noise_schedule(10)
    assert len(betas) == len(abar) == len(sigma) == 10
    assert abar[0] == pytest.approx(1 - betas[0])
    disk = vs.rasterize_curve([(10, 10)] * 4, 3.0, 3.0, 21, 21)
    assert disk.sum() == 29
    assert np.array_equal(vs.skeletonize(vs.skeletonize(disk)), vs.skeletonize(disk))


def test_cli_in_process(tmp_path):
    code, out, _ = vs.run_cli(["synth", "--count", "1", "--size", "96", "--depth", "2", "--out", str(tmp_path)])
    assert code == 0
    index = json.loads((tmp_path / "index.json").read_text())
    assert index["count"] == 1
    code, _, err = vs.run_cli(["synth", "--order", "7", "--out", str(tmp_path)])
    assert code == 1
    assert "7" in err
