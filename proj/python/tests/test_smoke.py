import os
import pathlib

import numpy as np
import pytest

import pixle

DATA = pathlib.Path(os.environ.get("PIXLE_DATA_DIR", pathlib.Path(__file__).resolve().parents[2] / "data"))


def probe_image():
    img = np.full((1, 4, 4), 0.1, dtype=np.float32)
    img[0, 0, 0] = 0.9
    return pixle.ImageTensor(img)


def test_image_round_trip():
    arr = np.random.default_rng(0).random((3, 5, 4), dtype=np.float32)
    img = pixle.ImageTensor(arr)
    assert img.shape == (3, 5, 4)
    np.testing.assert_array_equal(img.numpy(), arr)
    with pytest.raises(pixle.PixleError):
        pixle.ImageTensor(arr + 2.0)


def test_default_config():
    c = pixle.AttackConfig()
    assert (c.restarts, c.iterations, c.patch_min, c.patch_max) == (100, 50, 3, 3)
    assert c.mapping == pixle.MappingKind.RANDOM
    assert c.transfer == pixle.TransferMode.OVERWRITE
    assert c.query_budget() == 5001


def test_attack_pixel_probe():
    out = pixle.run_attack(probe_image(), 0, pixle.PixelProbeOracle())
    assert out.success
    assert out.queries == len(out.trajectory)
    assert out.adversarial.numpy()[0, 0, 0] < 0.5
    assert out.l0 == pixle.l0_pixel_distance(probe_image(), out.adversarial)


def test_callable_oracle_and_determinism():
    calls = []

    def probe(x):
        calls.append(1)
        p = float(x[0, 0, 0])
        return [p, 1.0 - p]

    cfg = pixle.AttackConfig()
    cfg.patch_min = cfg.patch_max = 1
    cfg.seed = 9
    oracle = pixle.CallableOracle(probe, 2)
    a = pixle.run_attack(probe_image(), 0, oracle, cfg)
    b = pixle.run_attack(probe_image(), 0, pixle.PixelProbeOracle(), cfg)
    assert len(calls) == a.queries
    assert a.trajectory == b.trajectory
    assert a.adversarial == b.adversarial


def test_callable_oracle_rejects_bad_vectors():
    oracle = pixle.CallableOracle(lambda x: [0.5, 0.6], 2)
    with pytest.raises(pixle.ProtocolError):
        oracle.query(probe_image())


def test_patch_and_mapping_helpers():
    assert len(pixle.build_patch_indices(7, 7, 3, 3, 8, 8)) == 9
    assert pixle.build_patch_indices(7, 7, 2, 2, 8, 8)[0] == (6, 6)
    img = pixle.ImageTensor(np.array([[[0.9, 0.1], [0.2, 0.3]]], dtype=np.float32))
    swapped = pixle.apply_mapping(img, [(0, 0)], [(0, 1)], pixle.TransferMode.SWAP)
    assert swapped.numpy()[0, 0, 1] == pytest.approx(0.9)
    assert pixle.map_pixel(pixle.MappingKind.DISTANCE, (0, 0), img) == (0, 1)
    assert pixle.aggregate_metrics([100.0, 200.0]) == (150.0, 50.0)


def test_linear_model_file(tmp_path):
    w = np.zeros((2, 4), dtype=np.float32)
    w[1, 0] = 5.0
    model = pixle.LinearModel(w, np.zeros(2, dtype=np.float32), (1, 2, 2))
    model.save(tmp_path / "m.pixlw")
    oracle = pixle.make_oracle(f"linear:{tmp_path / 'm.pixlw'}")
    probs = oracle.query(pixle.ImageTensor(np.zeros((1, 2, 2), dtype=np.float32)))
    assert probs == pytest.approx([0.5, 0.5])
    with pytest.raises(pixle.ConfigError):
        pixle.make_oracle("nonsense")


def test_campaign_and_matrix(tmp_path):
    digits = DATA / "digits3"
    oracle = pixle.make_oracle(f"linear:{digits / 'model.pixlw'}")
    dataset = pixle.select_correctly_classified(pixle.load_manifest(digits / "manifest.csv"), oracle, 3)
    assert len(dataset) == 9
    cfg = pixle.AttackConfig()
    cfg.restarts = 20
    report = pixle.run_campaign(dataset, oracle, cfg, out_dir=tmp_path / "c")
    assert 0.0 <= report["success_rate"] <= 100.0
    assert len(report["per_image"]) == 9
    assert (tmp_path / "c" / "per_image.csv").exists()
    matrix = pixle.run_targeted_matrix(dataset, oracle, cfg, quota=1)
    assert matrix["cells"][0][0] is None
    assert len(matrix["cells"]) == 3


def test_cli_entry_point(tmp_path):
    pixle.save_png(tmp_path / "x.png", probe_image())
    code, out, err = pixle.run_cli(
        ["attack", "--oracle", "builtin:pixel-probe", "--image", str(tmp_path / "x.png"), "--label", "0",
         "--out", str(tmp_path)])
    assert code == 0, err
    assert out.startswith("success")
    assert pixle.run_cli(["attack"])[0] == 1
