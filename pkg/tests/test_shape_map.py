import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from PIL import Image

from gprtopo.cubical import build_sublevel_complex
from gprtopo.image import GrayImage, normalize
from gprtopo.persistence import PersistenceDiagram, compute_persistence
from gprtopo.shape_map import (ShapeMap, TopoConfig, fuse, generator_pixels,
                               render_shape_map, rendered_generators, save_fused,
                               topo_features, topo_pipeline, write_generators_csv)
from oracles import random_images


def two_loops():
    # loops around (1,1) and (1,3), lifetimes 0.9 and 0.45
    px = np.zeros((3, 5))
    px[1, 1] = 0.9
    px[1, 3] = 0.45
    return GrayImage(px)


def diagram(img):
    return compute_persistence(build_sublevel_complex(img))


def test_empty_diagram_gives_zero_map():
    m = render_shape_map(PersistenceDiagram((), (4, 3)), (4, 3))
    assert m.values.shape == (3, 4) and not m.values.any()


def test_ring_boundary(ring):
    m = render_shape_map(diagram(ring), (3, 3)).values
    expected = np.ones((3, 3))
    expected[1, 1] = 0
    assert np.array_equal(m, expected)


def test_ring_filled(ring):
    m = render_shape_map(diagram(ring), (3, 3), mode="filled").values
    assert np.array_equal(m, np.ones((3, 3)))


def test_lifetime_ratio():
    img = two_loops()
    gens = rendered_generators(diagram(img), (5, 3))
    assert sorted(g.intensity for g in gens) == pytest.approx([0.5, 1.0])
    m = render_shape_map(diagram(img), (5, 3)).values
    assert m[0, 0] == 1.0 and m[0, 4] == pytest.approx(0.5)
    assert m[0, 2] == 1.0  # shared column takes the max
    assert m[1, 1] == 0.0 and m[1, 3] == 0.0


def test_dims_mismatch(ring):
    with pytest.raises(ValueError):
        render_shape_map(diagram(ring), (4, 3))
    with pytest.raises(ValueError):
        render_shape_map(diagram(ring), (3, 3), mode="solid")


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["boundary", "filled"]))
def test_map_matches_generator_masks(seed, mode):
    px = next(random_images(1, seed, max_side=14, levels=6))
    img = GrayImage(px)
    d = diagram(img)
    dims = (img.width, img.height)
    m = render_shape_map(d, dims, mode).values
    loops = [p for p in d.of_dim(1)]
    ref = np.zeros_like(m)
    if loops:
        l_max = max(p.lifetime for p in loops)
        for p in loops:
            mask = generator_pixels(p.rep_cycle, dims, mode)
            ref[mask] = np.maximum(ref[mask], p.lifetime / l_max)
    assert np.array_equal(m, ref)
    assert m.min() >= 0 and m.max() <= 1
    if d.of_dim(1):
        assert m.max() == 1.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_filled_contains_boundary(seed):
    px = next(random_images(1, seed, max_side=14, levels=6))
    img = GrayImage(px)
    for p in diagram(img).of_dim(1):
        edge = generator_pixels(p.rep_cycle, (img.width, img.height))
        full = generator_pixels(p.rep_cycle, (img.width, img.height), "filled")
        assert np.all(full[edge])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_min_lifetime_monotone(seed):
    px = next(random_images(1, seed, max_side=16, levels=8))
    img = GrayImage(px)
    d = diagram(img)
    prev = None
    for t in np.linspace(0, 1, 9):
        on = render_shape_map(d, (img.width, img.height), min_lifetime=t).values > 0
        if prev is not None:
            assert np.all(prev[on])
        prev = on


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 0.95))
def test_scale_invariance(seed, k):
    px = next(random_images(1, seed, max_side=12, levels=6))
    img = GrayImage(px)
    scaled = normalize(GrayImage(px * k))
    cfg = TopoConfig(levels=None)
    a = topo_features(img, cfg).shape_map.values > 0
    b = topo_features(scaled, cfg).shape_map.values > 0
    assert np.array_equal(a, b)


def test_fuse_examples():
    raw = GrayImage([[0.4]])
    topo = ShapeMap(np.array([[0.8]]))
    assert fuse(raw, topo, 0.5).blend[0, 0] == pytest.approx(0.6)
    assert fuse(raw, topo, 1.0).blend[0, 0] == 0.4
    assert fuse(raw, topo, 0.0).blend[0, 0] == 0.8
    assert fuse(raw, topo, 0.3).alpha == 0.3
    with pytest.raises(ValueError):
        fuse(raw, ShapeMap(np.zeros((2, 2))))
    with pytest.raises(ValueError):
        fuse(raw, topo, 1.5)


@given(st.floats(0, 1))
def test_fuse_affine_in_alpha(alpha):
    rng = np.random.default_rng(0)
    raw = GrayImage(rng.random((4, 5)))
    topo = ShapeMap(rng.random((4, 5)))
    b0, b1 = fuse(raw, topo, 0).blend, fuse(raw, topo, 1).blend
    assert np.allclose(fuse(raw, topo, alpha).blend, alpha * b1 + (1 - alpha) * b0)


def test_pipeline_ring(ring):
    f = topo_pipeline(ring, TopoConfig(levels=11))
    assert f.topo.sum() == 8 and f.topo[1, 1] == 0
    assert np.array_equal(f.raw, ring.pixels)


def test_pipeline_constant():
    img = GrayImage(np.full((5, 6), 0.3))
    f = topo_pipeline(img, TopoConfig(alpha=0.25))
    assert not f.topo.any()
    assert np.allclose(f.blend, 0.25 * img.pixels)


def test_invert_changes_polarity():
    # a dark ring on a bright field only appears as a loop without inversion
    px = np.full((5, 5), 1.0)
    px[1:4, 1:4] = 0.0
    px[2, 2] = 1.0
    img = GrayImage(px)
    assert topo_pipeline(img).topo.any()
    assert not topo_pipeline(img, TopoConfig(invert=True)).topo[2, 2]


def test_outputs_deterministic(tmp_path, ring):
    for k in range(2):
        save_fused(topo_pipeline(ring), tmp_path / f"f{k}.png")
        save_fused(topo_pipeline(ring), tmp_path / f"b{k}.png", blend_only=True)
    assert (tmp_path / "f0.png").read_bytes() == (tmp_path / "f1.png").read_bytes()
    with Image.open(tmp_path / "f0.png") as im:
        assert im.mode == "RGB" and im.size == (3, 3)
        assert im.getpixel((0, 0)) == (26, 255, 140)
    with Image.open(tmp_path / "b0.png") as im:
        assert im.mode == "L"


def test_generators_csv(tmp_path):
    img = two_loops()
    gens = rendered_generators(diagram(img), (5, 3))
    write_generators_csv(gens, tmp_path / "g.csv")
    lines = (tmp_path / "g.csv").read_text().splitlines()
    assert lines[0].startswith("birth,death,lifetime,intensity,n_pixels")
    assert lines[1].split(",")[3] == "1.0"
    assert lines[1].split(",")[4:] == ["8", "0", "0", "2", "2"]
