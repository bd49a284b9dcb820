import numpy as np
import pytest
from PIL import Image

from gprtopo.cli import PipelineConfig, main, read_config, ConfigError
from gprtopo.image import GrayImage, load_image, save_image, write_pgm
from gprtopo.persistence import read_diagram_csv
from gprtopo.preproc import Bscan, write_bscan
from conftest import write_ring_pgm


def tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


def test_synth_rejects_zero(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["synth", "--out", str(tmp_path), "--n", "0"])
    assert exc.value.code == 2


def test_synth_deterministic(tmp_path, capsys):
    for name in ("a", "b"):
        assert main(["synth", "--out", str(tmp_path / name), "--n", "2", "--seed", "9"]) == 0
    assert capsys.readouterr().out.strip().endswith("manifest.txt")
    assert tree(tmp_path / "a") == tree(tmp_path / "b")
    img = load_image(tmp_path / "a" / "images" / "scene_00000.png")
    assert img.width == 456


def test_topo_ring(tmp_path):
    src = write_ring_pgm(tmp_path / "ring.pgm")
    assert main(["topo", str(src), "--out", str(tmp_path / "o"), "--levels", "11"]) == 0
    rows = read_diagram_csv(tmp_path / "o" / "ring_diagram.csv")
    loops = [r for r in rows if r["dim"] == 1]
    assert len(loops) == 1 and loops[0]["lifetime"] == pytest.approx(0.9)
    with Image.open(tmp_path / "o" / "ring_fused.png") as im:
        assert im.mode == "RGB" and im.size == (3, 3)
    gens = (tmp_path / "o" / "ring_generators.csv").read_text().splitlines()
    assert len(gens) == 2


def test_topo_constant(tmp_path):
    src = tmp_path / "flat.pgm"
    write_pgm(GrayImage(np.full((6, 7), 0.4)), src)
    assert main(["topo", str(src), "--out", str(tmp_path / "o")]) == 0
    assert not [r for r in read_diagram_csv(tmp_path / "o" / "flat_diagram.csv")
                if r["dim"] == 1]


def test_topo_parallel_matches_serial(tmp_path, monkeypatch):
    monkeypatch.delenv("GPRTOPO_THREADS", raising=False)
    rng = np.random.default_rng(1)
    srcs = []
    for k in range(8):
        p = tmp_path / "in" / f"img{k}.png"
        p.parent.mkdir(exist_ok=True)
        save_image(GrayImage(rng.integers(0, 6, size=(20, 24)) / 5), p)
        srcs.append(str(p))
    assert main(["topo", *srcs, "--out", str(tmp_path / "j1"), "--jobs", "1"]) == 0
    assert main(["topo", *srcs, "--out", str(tmp_path / "j4"), "--jobs", "4"]) == 0
    assert tree(tmp_path / "j1") == tree(tmp_path / "j4")
    assert len(tree(tmp_path / "j1")) == 24


def test_topo_per_file_failure(tmp_path, capsys):
    good = write_ring_pgm(tmp_path / "ring.pgm")
    bad = tmp_path / "broken.pgm"
    bad.write_bytes(b"P5\n9 9\n255\n")
    code = main(["topo", str(bad), str(good), "--out", str(tmp_path / "o")])
    assert code == 1
    assert "broken.pgm" in capsys.readouterr().err
    assert (tmp_path / "o" / "ring_diagram.csv").exists()


def test_topo_luma_flag(tmp_path, capsys):
    rgb = np.zeros((4, 4, 3), dtype=np.uint8)
    rgb[1:3, 1:3] = 200
    Image.fromarray(rgb).save(tmp_path / "c.png")
    assert main(["topo", str(tmp_path / "c.png"), "--out", str(tmp_path / "o")]) == 1
    assert "color input" in capsys.readouterr().err
    assert main(["topo", str(tmp_path / "c.png"), "--out", str(tmp_path / "o"), "--luma"]) == 0


def test_preprocess(tmp_path, capsys):
    rng = np.random.default_rng(2)
    write_bscan(Bscan(rng.normal(size=(512, 6)), 0.25e-9, 0.024), tmp_path / "a.gprb")
    np.savetxt(tmp_path / "b.csv", rng.normal(size=(64, 3)), delimiter=",")
    assert main(["preprocess", str(tmp_path / "a.gprb"), "--out", str(tmp_path / "o")]) == 0
    assert sorted(p.name for p in (tmp_path / "o").iterdir()) == [
        f"a_agc{k}.png" for k in range(5)]
    assert main(["preprocess", str(tmp_path / "b.csv"), "--out", str(tmp_path / "o2"),
                 "--dt", "0.25e-9", "--trace-spacing", "0.024", "--agc-windows", ""]) == 0
    assert load_image(tmp_path / "o2" / "b.png").shape == (64, 3)


def test_export(tmp_path, capsys):
    assert main(["synth", "--out", str(tmp_path / "s"), "--n", "4"]) == 0
    assert main(["synth", "--out", str(tmp_path / "f"), "--n", "3", "--seed", "50"]) == 0
    assert main(["export", "--input", f"simulated={tmp_path / 's' / 'manifest.txt'}",
                 "--input", f"field={tmp_path / 'f' / 'manifest.txt'}",
                 "--out", str(tmp_path / "d")]) == 0
    head = (tmp_path / "d" / "manifest.txt").read_text().splitlines()[0]
    assert head == "#counts\ttrain:field=2\ttrain:simulated=3\tval:field=1\tval:simulated=1"


def write_labels(root):
    root.mkdir()
    (root / "img_a.txt").write_text("0 0.250000 0.250000 0.200000 0.200000\n"
                                    "0 0.750000 0.750000 0.200000 0.200000\n")
    return root


def test_eval(tmp_path, capsys):
    labels = write_labels(tmp_path / "labels")
    perfect = tmp_path / "perfect.csv"
    perfect.write_text("image_id,class_id,cx,cy,w,h,confidence\n"
                       "img_a,0,0.25,0.25,0.2,0.2,0.9\nimg_a,0,0.75,0.75,0.2,0.2,0.8\n")
    assert main(["eval", "--preds", str(perfect), "--labels", str(labels)]) == 0
    assert "mAP@0.5\t1.000000" in capsys.readouterr().out

    empty = tmp_path / "empty.csv"
    empty.write_text("image_id,class_id,cx,cy,w,h,confidence\n")
    assert main(["eval", "--preds", str(empty), "--labels", str(labels)]) == 0
    assert "mAP@0.5\t0.000000" in capsys.readouterr().out

    three = tmp_path / "three.csv"
    three.write_text("img_a,0,0.25,0.25,0.2,0.2,0.9\nimg_a,0,0.25,0.75,0.2,0.2,0.8\n"
                     "img_a,0,0.75,0.75,0.2,0.2,0.7\n")
    out = tmp_path / "rep" / "three"
    assert main(["eval", "--preds", str(three), "--labels", str(labels),
                 "--out", str(out)]) == 0
    assert "AP@0.50\t0.833333" in capsys.readouterr().out
    csv_rows = dict(line.split(",") for line in
                    (tmp_path / "rep" / "three.csv").read_text().splitlines()[1:])
    assert float(csv_rows["mAP@0.5"]) == pytest.approx(5 / 6, abs=1e-6)
    assert (tmp_path / "rep" / "three.txt").exists()


def test_eval_malformed_line(tmp_path, capsys):
    labels = write_labels(tmp_path / "labels")
    bad = tmp_path / "bad.csv"
    bad.write_text("img_a,0,0.25,0.25,0.2,0.2,0.9\nimg_a,0,0.25\n")
    assert main(["eval", "--preds", str(bad), "--labels", str(labels)]) == 1
    assert "line 2" in capsys.readouterr().err


def test_config_roundtrip(tmp_path, capsys):
    src = write_ring_pgm(tmp_path / "ring.pgm")
    dumped = tmp_path / "eff.txt"
    assert main(["topo", str(src), "--out", str(tmp_path / "a"), "--levels", "11",
                 "--alpha", "0.3", "--dump-config", str(dumped)]) == 0
    assert "levels=11\n" in dumped.read_text() and "alpha=0.3\n" in dumped.read_text()
    assert main(["topo", str(src), "--out", str(tmp_path / "b"),
                 "--config", str(dumped)]) == 0
    assert tree(tmp_path / "a") == tree(tmp_path / "b")
    cfg = PipelineConfig(**read_config(dumped))
    assert cfg.dumps() == dumped.read_text()


def test_flags_override_config(tmp_path, capsys):
    conf = tmp_path / "c.txt"
    conf.write_text("# comment\nlevels = 11\nalpha=0.9\n")
    src = write_ring_pgm(tmp_path / "ring.pgm")
    dumped = tmp_path / "eff.txt"
    main(["topo", str(src), "--out", str(tmp_path / "o"), "--config", str(conf),
          "--alpha", "0.2", "--dump-config", str(dumped)])
    text = dumped.read_text()
    assert "levels=11\n" in text and "alpha=0.2\n" in text


def test_config_rejects_unknown_and_invalid(tmp_path, capsys):
    conf = tmp_path / "c.txt"
    conf.write_text("levels=11\ncolour=red\n")
    with pytest.raises(ConfigError, match="unknown config key"):
        read_config(conf)
    src = write_ring_pgm(tmp_path / "ring.pgm")
    with pytest.raises(SystemExit) as exc:
        main(["topo", str(src), "--out", str(tmp_path / "o"), "--config", str(conf)])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["topo", str(src), "--out", str(tmp_path / "o"), "--alpha", "2"])
    assert exc.value.code == 2
    with pytest.raises(ConfigError):
        PipelineConfig(agc_windows="32,2").validate()


def test_threads_env_caps_jobs(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("GPRTOPO_THREADS", "2")
    src = write_ring_pgm(tmp_path / "ring.pgm")
    dumped = tmp_path / "eff.txt"
    main(["topo", str(src), "--out", str(tmp_path / "o"), "--jobs", "8",
          "--dump-config", str(dumped)])
    assert "jobs=2\n" in dumped.read_text()
