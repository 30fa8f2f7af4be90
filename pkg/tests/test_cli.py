"""Command-line behavior, exercised through main(argv) plus one subprocess."""

import json
import subprocess
import sys

import numpy as np
import pytest
from helpers import write_gray

from mattekit import ProbTrimap, Trimap, load_png, soften, write_ptm
from mattekit.cli import main


def run_cli(capsys, *argv):
    rc = main([str(a) for a in argv])
    captured = capsys.readouterr()
    lines = captured.out.strip().splitlines()
    payload = json.loads(lines[-1]) if lines else None
    return rc, payload


def disk_mask_bytes(size, radius):
    yy, xx = np.mgrid[0:size, 0:size]
    inside = np.hypot(yy - size // 2, xx - size // 2) <= radius
    return inside.astype(np.uint8) * 255


# ---------------------------------------------------------------------------
# trimap


def test_trimap_command_disk(tmp_path, capsys):
    mask_path = tmp_path / "mask.png"
    out_path = tmp_path / "tri.png"
    write_gray(mask_path, disk_mask_bytes(401, 150))
    rc, payload = run_cli(capsys, "trimap", "--mask", mask_path, "--out", out_path)
    assert rc == 0
    assert 149.0 <= payload["D"] <= 151.0
    assert set(payload["radii"]) == {"hair", "fur", "solid"}
    assert payload["radii"]["solid"] == 2  # floor(0.015 * ~150 + 0.5)
    tri = load_png(out_path, "trimap")
    row = tri.plane[200]
    # the center row crosses the annulus twice: 2 * (2r + 1) unknown pixels
    assert abs(int((row == 128).sum()) - 10) <= 2
    assert row[200] == 255
    assert row[0] == 0


def test_trimap_command_empty_mask(tmp_path, capsys):
    mask_path = tmp_path / "mask.png"
    out_path = tmp_path / "tri.png"
    write_gray(mask_path, np.zeros((32, 32), dtype=np.uint8))
    rc, payload = run_cli(capsys, "trimap", "--mask", mask_path, "--out", out_path)
    assert rc == 0
    assert payload["D"] == 0.0
    assert (load_png(out_path, "trimap").plane == 0).all()


def test_trimap_flags_mutually_exclusive(tmp_path, capsys):
    mask_path = tmp_path / "mask.png"
    write_gray(mask_path, disk_mask_bytes(64, 20))
    with pytest.raises(SystemExit) as info:
        main(["trimap", "--mask", str(mask_path), "--hair-mask", str(mask_path),
              "--fur", "--out", str(tmp_path / "t.png")])
    assert info.value.code == 2
    capsys.readouterr()


def test_trimap_bad_rates_exits_one(tmp_path, capsys):
    mask_path = tmp_path / "mask.png"
    write_gray(mask_path, disk_mask_bytes(64, 20))
    rc, _ = run_cli(capsys, "trimap", "--mask", mask_path, "--rates", "1,2",
                    "--out", tmp_path / "t.png")
    assert rc == 1


def test_trimap_conv_command(tmp_path, capsys):
    alpha = np.zeros((24, 24), dtype=np.uint8)
    alpha[:, 12:] = 255
    alpha_path = tmp_path / "alpha.png"
    write_gray(alpha_path, alpha)
    out_path = tmp_path / "tri.png"
    rc, payload = run_cli(capsys, "trimap-conv", "--alpha", alpha_path,
                          "--kernel-radius", "2", "--out", out_path)
    assert rc == 0
    assert payload["kernel_radius"] == 2
    tri = load_png(out_path, "trimap")
    assert set(np.unique(tri.plane)) <= {0, 128, 255}
    assert (tri.plane[:, 10:14] == 128).all()  # band straddles the step


# ---------------------------------------------------------------------------
# synth


def test_synth_command_determinism(tmp_path, capsys, pools):
    outs = []
    for name in ("run1", "run2"):
        out_dir = tmp_path / name
        argv = ["synth", "--fg-dir", pools.fg, "--alpha-dir", pools.alpha,
                "--per-fg", "2", "--out-dir", out_dir, "--seed", "5"]
        for bg in pools.bgs:
            argv += ["--bg-dir", bg]
        rc, payload = run_cli(capsys, *argv)
        assert rc == 0
        assert payload["samples"] == 4
        outs.append(out_dir)
    m1 = (outs[0] / "manifest.jsonl").read_bytes()
    m2 = (outs[1] / "manifest.jsonl").read_bytes()
    assert m1 == m2
    assert len(m1.splitlines()) == 4
    for sub in ("composite", "alpha", "trimap"):
        names = sorted(p.name for p in (outs[0] / sub).glob("*.png"))
        assert names == [f"{i:05d}.png" for i in range(4)]
        for name in names:
            assert (outs[0] / sub / name).read_bytes() == (outs[1] / sub / name).read_bytes()
    tri = load_png(outs[0] / "trimap" / "00000.png", "trimap")
    assert set(np.unique(tri.plane)) <= {0, 128, 255}
    assert tri.plane.shape == (320, 320)


def test_synth_command_missing_background_pool(tmp_path, capsys, pools):
    empty = tmp_path / "empty"
    empty.mkdir()
    rc, _ = run_cli(capsys, "synth", "--fg-dir", pools.fg, "--alpha-dir", pools.alpha,
                    "--bg-dir", empty, "--per-fg", "1", "--out-dir", tmp_path / "o")
    assert rc == 1


# ---------------------------------------------------------------------------
# compose / fuse / harden


def test_compose_command_opaque_alpha(tmp_path, capsys, pools):
    alpha_path = tmp_path / "ones.png"
    write_gray(alpha_path, np.full((1000, 1000), 255, dtype=np.uint8))
    out_path = tmp_path / "out.png"
    fg_path = pools.fg / "owl.png"
    rc, _ = run_cli(capsys, "compose", "--fg", fg_path, "--bg", pools.bgs[0] / "field.png",
                    "--alpha", alpha_path, "--out", out_path)
    assert rc == 0
    got = load_png(out_path, "image")
    want = load_png(fg_path, "image")
    assert (got.planes == want.planes).all()


def test_fuse_command_unknown_passthrough(tmp_path, capsys):
    rng = np.random.default_rng(40)
    alpha_bytes = rng.integers(0, 256, (12, 12), dtype=np.uint8)
    alpha_path = tmp_path / "alpha.png"
    write_gray(alpha_path, alpha_bytes)
    zeros = np.zeros((12, 12), dtype=np.float32)
    ptm_path = tmp_path / "u.ptm"
    write_ptm(ProbTrimap(zeros, np.ones((12, 12), dtype=np.float32), zeros), ptm_path)
    out_path = tmp_path / "fused.png"
    rc, _ = run_cli(capsys, "fuse", "--ptm", ptm_path, "--alpha", alpha_path,
                    "--out", out_path)
    assert rc == 0
    # byte -> unit float -> byte is the identity, so U==1 passes bytes through
    assert out_path.read_bytes() != b""
    assert (load_png(out_path, "gray").plane == alpha_bytes / 255.0).all()


def test_fuse_command_scalar_case(tmp_path, capsys):
    alpha_path = tmp_path / "alpha.png"
    write_gray(alpha_path, np.full((4, 4), 153, dtype=np.uint8))  # 0.6
    prob = ProbTrimap(np.full((4, 4), 0.3, dtype=np.float32),
                      np.full((4, 4), 0.5, dtype=np.float32),
                      np.full((4, 4), 0.2, dtype=np.float32))
    ptm_path = tmp_path / "p.ptm"
    write_ptm(prob, ptm_path)
    out_path = tmp_path / "fused.png"
    rc, _ = run_cli(capsys, "fuse", "--ptm", ptm_path, "--alpha", alpha_path,
                    "--out", out_path)
    assert rc == 0
    got = load_png(out_path, "gray").plane
    assert np.abs(got - 0.5).max() <= 1.0 / 255.0  # 0.2 + 0.5 * 0.6


def test_fuse_command_bad_inputs_exit_one(tmp_path, capsys):
    alpha_path = tmp_path / "alpha.png"
    write_gray(alpha_path, np.zeros((8, 8), dtype=np.uint8))
    garbage = tmp_path / "bad.ptm"
    garbage.write_bytes(b"NOTAPTM!" + b"\x00" * 32)
    rc, _ = run_cli(capsys, "fuse", "--ptm", garbage, "--alpha", alpha_path,
                    "--out", tmp_path / "o.png")
    assert rc == 1
    small = ProbTrimap(np.zeros((4, 4), dtype=np.float32),
                       np.ones((4, 4), dtype=np.float32),
                       np.zeros((4, 4), dtype=np.float32))
    ptm_path = tmp_path / "small.ptm"
    write_ptm(small, ptm_path)
    rc, _ = run_cli(capsys, "fuse", "--ptm", ptm_path, "--alpha", alpha_path,
                    "--out", tmp_path / "o.png")
    assert rc == 1


def test_harden_command_round_trip(tmp_path, capsys):
    rng = np.random.default_rng(41)
    tri = Trimap(rng.choice([0, 128, 255], size=(9, 7)).astype(np.uint8))
    ptm_path = tmp_path / "soft.ptm"
    write_ptm(soften(tri), ptm_path)
    out_path = tmp_path / "hard.png"
    rc, _ = run_cli(capsys, "harden", "--ptm", ptm_path, "--out", out_path)
    assert rc == 0
    assert (load_png(out_path, "trimap").plane == tri.plane).all()


# ---------------------------------------------------------------------------
# eval


def banded_pngs(tmp_path):
    """gt/trimap plus two predictions: errors outside vs inside the band."""
    gt = np.zeros((24, 24), dtype=np.uint8)
    gt[:, 12:] = 255
    tri = gt.copy()
    tri[:, 9:15] = 128
    pred_out = gt.copy()
    pred_out[4, 2] = 200
    pred_out[20, 22] = 30
    pred_in = gt.copy()
    pred_in[6, 10] = 90
    paths = {}
    for name, arr in (("gt", gt), ("tri", tri), ("pred_out", pred_out),
                      ("pred_in", pred_in)):
        paths[name] = tmp_path / f"{name}.png"
        write_gray(paths[name], arr)
    return paths


def test_eval_single_zero_and_csv_append(tmp_path, capsys):
    paths = banded_pngs(tmp_path)
    csv_path = tmp_path / "log.csv"
    for expected_rows in (2, 3):  # header + n data rows
        rc, payload = run_cli(capsys, "eval", "--pred", paths["gt"], "--gt", paths["gt"],
                              "--trimap", paths["tri"], "--region", "unknown",
                              "--csv", csv_path)
        assert rc == 0
        assert payload["sad"] == 0.0
        assert payload["mse"] == 0.0
        assert payload["region"] == "unknown"
        lines = csv_path.read_text().strip().splitlines()
        assert len(lines) == expected_rows
    assert lines[0].startswith("stem,sad,mse,mse_x100,grad,conn,region,pixels")


def test_eval_single_region_split(tmp_path, capsys):
    paths = banded_pngs(tmp_path)
    rc, unknown = run_cli(capsys, "eval", "--pred", paths["pred_out"], "--gt", paths["gt"],
                          "--trimap", paths["tri"], "--region", "unknown")
    assert rc == 0
    rc, whole = run_cli(capsys, "eval", "--pred", paths["pred_out"], "--gt", paths["gt"])
    assert rc == 0
    assert unknown["sad"] == 0.0
    assert whole["sad"] > 0.0


def test_eval_unknown_without_trimap_exits_one(tmp_path, capsys):
    paths = banded_pngs(tmp_path)
    rc, _ = run_cli(capsys, "eval", "--pred", paths["gt"], "--gt", paths["gt"],
                    "--region", "unknown")
    assert rc == 1


def test_eval_batch_csv_and_mean(tmp_path, capsys):
    paths = banded_pngs(tmp_path)
    pred_dir, gt_dir, tri_dir = tmp_path / "pred", tmp_path / "gt", tmp_path / "tri"
    for d in (pred_dir, gt_dir, tri_dir):
        d.mkdir()
    stems = ("a", "b", "c")
    sources = {"a": "gt", "b": "pred_out", "c": "pred_in"}
    for stem in stems:
        (pred_dir / f"{stem}.png").write_bytes(paths[sources[stem]].read_bytes())
        (gt_dir / f"{stem}.png").write_bytes(paths["gt"].read_bytes())
        (tri_dir / f"{stem}.png").write_bytes(paths["tri"].read_bytes())
    csv_path = tmp_path / "batch.csv"
    rc, payload = run_cli(capsys, "eval", "--pred", pred_dir, "--gt", gt_dir,
                          "--trimap", tri_dir, "--region", "unknown",
                          "--csv", csv_path)
    assert rc == 0
    assert [item["stem"] for item in payload["items"]] == list(stems)
    assert payload["items"][0]["sad"] == 0.0
    assert payload["items"][1]["sad"] == 0.0  # errors sit outside the band
    assert payload["items"][2]["sad"] > 0.0
    want_mean = sum(item["sad"] for item in payload["items"]) / 3
    assert abs(payload["mean"]["sad"] - want_mean) <= 1e-12
    lines = csv_path.read_text().strip().splitlines()
    assert len(lines) == 5  # header + three stems + mean
    assert lines[-1].startswith("mean,")


def test_eval_batch_stem_mismatch_exits_one(tmp_path, capsys):
    paths = banded_pngs(tmp_path)
    pred_dir, gt_dir = tmp_path / "pred", tmp_path / "gt"
    pred_dir.mkdir()
    gt_dir.mkdir()
    (pred_dir / "a.png").write_bytes(paths["gt"].read_bytes())
    (pred_dir / "b.png").write_bytes(paths["gt"].read_bytes())
    (gt_dir / "a.png").write_bytes(paths["gt"].read_bytes())
    rc, _ = run_cli(capsys, "eval", "--pred", pred_dir, "--gt", gt_dir)
    assert rc == 1


def test_eval_threads_match_serial(tmp_path, capsys, monkeypatch):
    paths = banded_pngs(tmp_path)
    pred_dir, gt_dir = tmp_path / "pred", tmp_path / "gt"
    pred_dir.mkdir()
    gt_dir.mkdir()
    for stem, source in (("a", "gt"), ("b", "pred_out"), ("c", "pred_in")):
        (pred_dir / f"{stem}.png").write_bytes(paths[source].read_bytes())
        (gt_dir / f"{stem}.png").write_bytes(paths["gt"].read_bytes())
    rc, serial = run_cli(capsys, "eval", "--pred", pred_dir, "--gt", gt_dir)
    assert rc == 0
    rc, flagged = run_cli(capsys, "eval", "--pred", pred_dir, "--gt", gt_dir,
                          "--threads", "2")
    assert rc == 0
    monkeypatch.setenv("MATTEKIT_THREADS", "3")
    rc, from_env = run_cli(capsys, "eval", "--pred", pred_dir, "--gt", gt_dir)
    assert rc == 0
    assert serial == flagged == from_env
    monkeypatch.setenv("MATTEKIT_THREADS", "0")
    rc, _ = run_cli(capsys, "eval", "--pred", pred_dir, "--gt", gt_dir)
    assert rc == 1


# ---------------------------------------------------------------------------
# pyramid


def test_pyramid_command_constant_map(tmp_path, capsys):
    map_path = tmp_path / "gray.png"
    write_gray(map_path, np.full((64, 64), 128, dtype=np.uint8))
    out_dir = tmp_path / "levels"
    rc, payload = run_cli(capsys, "pyramid", "--map", map_path, "--levels", "3",
                          "--out-dir", out_dir)
    assert rc == 0
    assert payload["levels"] == 3
    assert payload["files"] == ["level_01.png", "level_02.png", "level_03.png"]
    assert payload["encoding"] == "(value+1)/2"
    # constant input: zero bands encode near 0.5, the residual keeps the value
    band = load_png(out_dir / "level_01.png", "gray").plane
    assert np.abs(band - 0.5).max() <= 1.5 / 255.0
    residual = load_png(out_dir / "level_03.png", "gray").plane
    assert np.abs(residual - (0.5 + 128 / 255.0 / 2.0)).max() <= 1.5 / 255.0
    assert residual.shape == (16, 16)


# ---------------------------------------------------------------------------
# module entry point


def test_module_invocation_subprocess(tmp_path):
    gt = tmp_path / "gt.png"
    write_gray(gt, np.zeros((16, 16), dtype=np.uint8))
    proc = subprocess.run(
        [sys.executable, "-m", "mattekit.cli", "eval", "--pred", str(gt), "--gt", str(gt)],
        capture_output=True, text=True, timeout=120,
    )
    assert proc.returncode == 0
    payload = json.loads(proc.stdout.strip().splitlines()[-1])
    assert payload["sad"] == 0.0
    assert payload["region"] == "whole"
