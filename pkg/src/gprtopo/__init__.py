"""Topological feature maps for ground-penetrating radar B-scans.

Sublevel-set cubical persistent homology turns a B-scan image into a map of
its loop generators weighted by lifetime; the package also covers the radar
signal chain, synthetic scenes, YOLO export and detection metrics.
"""
from .cubical import FilteredComplex, betti_oracle, build_sublevel_complex
from .image import GrayImage, invert, load_image, normalize, quantize, save_image
from .persistence import (PersistenceDiagram, PersistencePair, betti_curve,
                          compute_persistence, filter_by_lifetime, lifetime)
from .preproc import Bscan, agc, agc_variants, background_removal, bandpass, to_image
from .shape_map import (FusedImage, ShapeMap, TopoConfig, fuse, render_shape_map,
                        topo_features, topo_pipeline)
from .synth import GroundTruthBox, PipeSpec, SceneSpec, render_scene, ricker

__version__ = "0.1.0"

__all__ = [
    "Bscan", "FilteredComplex", "FusedImage", "GrayImage", "GroundTruthBox",
    "PersistenceDiagram", "PersistencePair", "PipeSpec", "SceneSpec", "ShapeMap",
    "TopoConfig", "agc", "agc_variants", "background_removal", "bandpass",
    "betti_curve", "betti_oracle", "build_sublevel_complex", "compute_persistence",
    "filter_by_lifetime", "fuse", "invert", "lifetime", "load_image", "normalize",
    "quantize", "render_scene", "render_shape_map", "ricker", "save_image",
    "to_image", "topo_features", "topo_pipeline",
]
