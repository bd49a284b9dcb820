"""Command-line entry point: ``gprtopo <command> [options]``.

Commands: synth, preprocess, topo, export, eval, pipeline. Options can come
from a ``key=value`` config file (``--config``); explicit flags win. The
effective configuration can be written back with ``--dump-config``.
"""
from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

from . import __version__
from .export import AnnotatedItem, export_yolo
from .image import load_image, save_image
from .metrics import evaluate, read_label_file, read_labels_dir, read_predictions_csv
from .persistence import write_diagram_csv
from .preproc import (agc_variants, background_removal, bandpass, load_bscan, to_image)
from .shape_map import TopoConfig, rendered_generators, save_fused, topo_features, \
    write_generators_csv
from .synth import DatasetConfig, generate_dataset

THREADS_ENV = "GPRTOPO_THREADS"


class ConfigError(ValueError):
    """Invalid option value or config file; reported as a usage error."""


@dataclass
class PipelineConfig:
    seed: int = 0
    jobs: int = 1
    n: int = 10
    # scene sampling
    max_pipes: int = 1
    noise_rms: float = 0.005
    clutter_bands: int = 2
    # signal chain
    background_removal: bool = True
    bandpass: bool = True
    f_lo: float = 100e6
    f_hi: float = 1900e6
    taper_frac: float = 0.1
    agc_windows: str = "32,64,128,256,512"  # samples; empty disables AGC
    agc_target: float = 1.0
    clip_pct: float = 100.0
    # topology
    invert: bool = False
    levels: int = 64
    min_lifetime: float = 0.0
    mode: str = "boundary"
    alpha: float = 0.5
    blend_only: bool = False
    luma: bool = False
    # export
    train_frac: float = 0.7

    def validate(self) -> None:
        try:
            self._check()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def _check(self) -> None:
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        if not 0 < self.train_frac < 1:
            raise ValueError("train_frac must lie strictly between 0 and 1")
        if not 0 <= self.alpha <= 1:
            raise ValueError("alpha must lie in [0, 1]")
        if self.levels < 2:
            raise ValueError("levels must be >= 2")
        if self.min_lifetime < 0:
            raise ValueError("min_lifetime must be non-negative")
        if self.mode not in ("boundary", "filled"):
            raise ValueError("mode must be boundary or filled")
        if not 50 < self.clip_pct <= 100:
            raise ValueError("clip_pct must lie in (50, 100]")
        self.agc_window_samples()

    def agc_window_samples(self) -> list[int]:
        vals = [int(v) for v in self.agc_windows.replace(" ", "").split(",") if v]
        if any(v < 3 for v in vals):
            raise ValueError("AGC windows must be >= 3 samples")
        return vals

    def topo(self) -> TopoConfig:
        return TopoConfig(invert=self.invert, levels=self.levels,
                          min_lifetime=self.min_lifetime, mode=self.mode, alpha=self.alpha)

    def dataset(self) -> DatasetConfig:
        return DatasetConfig(max_pipes=self.max_pipes, noise_rms=self.noise_rms,
                             clutter_bands=self.clutter_bands)

    def dumps(self, with_jobs: bool = True) -> str:
        return "".join(f"{f.name}={_format_value(getattr(self, f.name))}\n"
                       for f in fields(self) if with_jobs or f.name != "jobs")


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v) if isinstance(v, float) else str(v)


def _parse_value(kind, text: str):
    text = text.strip()
    if kind == "bool":
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if kind == "int":
        return int(text)
    if kind == "float":
        return float(text)
    return text


_FIELD_KINDS = {f.name: f.type for f in fields(PipelineConfig)}


def read_config(path) -> dict:
    """Parse ``key=value`` lines; ``#`` starts a comment. Unknown keys are errors."""
    try:
        return _read_config(path)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _read_config(path) -> dict:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _FIELD_KINDS:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        out[key] = _parse_value(_FIELD_KINDS[key], val)
    return out


def resolve_config(args) -> PipelineConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(read_config(args.config))
    for name in _FIELD_KINDS:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    cfg = PipelineConfig(**values)
    env = os.environ.get(THREADS_ENV)
    if env:
        cfg.jobs = max(1, min(cfg.jobs, int(env)))
    cfg.validate()
    if getattr(args, "dump_config", None):
        Path(args.dump_config).write_text(cfg.dumps())
    return cfg


# ---------------------------------------------------------------- workers


def _run_batch(fn, tasks, jobs: int):
    """Apply ``fn`` to every task; results come back in task order."""
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


def _guard(fn):
    def wrapped(task):
        try:
            return fn(task), None
        except Exception as exc:  # per-file failures are reported, not fatal
            return None, f"{task[0]}: {exc}"
    return wrapped


def _preprocess_one(task):
    src, out_dir, cfg, dt, dx = task
    b = load_bscan(src, dt, dx)
    if cfg.background_removal:
        b = background_removal(b)
    if cfg.bandpass:
        b = bandpass(b, cfg.f_lo, cfg.f_hi, cfg.taper_frac)
    stem = Path(src).stem
    windows = cfg.agc_window_samples()
    written = []
    if windows:
        variants = agc_variants(b, [w * b.dt for w in windows], cfg.agc_target)
        for k, v in enumerate(variants):
            dest = Path(out_dir) / f"{stem}_agc{k}.png"
            save_image(to_image(v, cfg.clip_pct), dest)
            written.append(dest)
    else:
        dest = Path(out_dir) / f"{stem}.png"
        save_image(to_image(b, cfg.clip_pct), dest)
        written.append(dest)
    return written


def _topo_one(task):
    src, out_dir, cfg = task
    img = load_image(src, luma=cfg.luma)
    tc = cfg.topo()
    res = topo_features(img, tc)
    stem = Path(src).stem
    out = Path(out_dir)
    fused_path = out / f"{stem}_fused.png"
    save_fused(res.fused, fused_path, blend_only=cfg.blend_only)
    write_diagram_csv(res.diagram, out / f"{stem}_diagram.csv")
    gens = rendered_generators(res.diagram, (img.width, img.height), tc.mode, tc.min_lifetime)
    write_generators_csv(gens, out / f"{stem}_generators.csv")
    return fused_path


def _report(errors) -> int:
    for e in errors:
        print(f"error: {e}", file=sys.stderr)
    return 1 if errors else 0


# ---------------------------------------------------------------- commands


def cmd_synth(args) -> int:
    cfg = resolve_config(args)
    manifest = generate_dataset(args.out, cfg.n, cfg.seed, cfg.dataset())
    print(manifest.path)
    return 0


def cmd_preprocess(args) -> int:
    cfg = resolve_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [(p, out, cfg, args.dt, args.trace_spacing) for p in args.inputs]
    results = _run_batch(_guard(_preprocess_one), tasks, cfg.jobs)
    for written, _ in results:
        for p in written or ():
            print(p)
    return _report([e for _, e in results if e])


def cmd_topo(args) -> int:
    cfg = resolve_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [(p, out, cfg) for p in args.inputs]
    results = _run_batch(_guard(_topo_one), tasks, cfg.jobs)
    for path, _ in results:
        if path is not None:
            print(path)
    return _report([e for _, e in results if e])


def _manifest_items(path, origin: str) -> list[AnnotatedItem]:
    base = Path(path).parent
    items = []
    for line in Path(path).read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        img, lbl = line.split("\t")[:2]
        items.append(AnnotatedItem(base / img, read_label_file(base / lbl), origin))
    return items


def cmd_export(args) -> int:
    cfg = resolve_config(args)
    items = []
    for spec in args.input:
        if "=" not in spec:
            raise ValueError(f"--input expects ORIGIN=MANIFEST, got {spec!r}")
        origin, path = spec.split("=", 1)
        items += _manifest_items(path, origin)
    manifest = export_yolo(items, args.out, cfg.train_frac, cfg.seed)
    print(manifest.path)
    return 0


def cmd_eval(args) -> int:
    preds = read_predictions_csv(args.preds)
    gts = read_labels_dir(args.labels)
    report = evaluate(preds, gts)
    text = report.text()
    sys.stdout.write(text)
    if args.out:
        prefix = Path(args.out)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        Path(f"{prefix}.txt").write_text(text)
        report.write_csv(f"{prefix}.csv")
    return 0


def cmd_pipeline(args) -> int:
    """synth -> preprocess -> topo -> export under one output directory."""
    cfg = resolve_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    # the worker count never changes results, so it stays out of the record
    (out / "config.txt").write_text(cfg.dumps(with_jobs=False))

    synth = generate_dataset(out / "synth", cfg.n, cfg.seed, cfg.dataset())
    pre_dir = out / "preprocessed"
    pre_dir.mkdir(exist_ok=True)
    bscans = [out / "synth" / "bscans" / f"{Path(img).stem}.gprb" for img, _ in synth.items]
    pre = _run_batch(_guard(_preprocess_one),
                     [(p, pre_dir, cfg, None, None) for p in bscans], cfg.jobs)
    errors = [e for _, e in pre if e]

    topo_dir = out / "topo"
    topo_dir.mkdir(exist_ok=True)
    tasks, labels = [], []
    for (written, _), (_, lbl) in zip(pre, synth.items):
        for p in written or ():
            tasks.append((p, topo_dir, cfg))
            labels.append(out / "synth" / lbl)
    fused = _run_batch(_guard(_topo_one), tasks, cfg.jobs)
    errors += [e for _, e in fused if e]

    items = [AnnotatedItem(path, read_label_file(lbl), "simulated")
             for (path, _), lbl in zip(fused, labels) if path is not None]
    if items:
        manifest = export_yolo(items, out / "dataset", cfg.train_frac, cfg.seed)
        print(manifest.path)
    return _report(errors)


# ---------------------------------------------------------------- parser


def _add_config_flags(p, groups=("all",)):
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--dump-config", metavar="PATH", help="write the effective config")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, help=f"worker threads (capped by ${THREADS_ENV})")
    if "synth" in groups:
        p.add_argument("--n", type=int, help="number of scenes")
        p.add_argument("--max-pipes", dest="max_pipes", type=int)
        p.add_argument("--noise-rms", dest="noise_rms", type=float)
        p.add_argument("--clutter-bands", dest="clutter_bands", type=int)
    if "pre" in groups:
        p.add_argument("--no-background-removal", dest="background_removal",
                       action="store_const", const=False)
        p.add_argument("--no-bandpass", dest="bandpass", action="store_const", const=False)
        p.add_argument("--f-lo", dest="f_lo", type=float)
        p.add_argument("--f-hi", dest="f_hi", type=float)
        p.add_argument("--taper-frac", dest="taper_frac", type=float)
        p.add_argument("--agc-windows", dest="agc_windows",
                       help="comma-separated window lengths in samples ('' disables AGC)")
        p.add_argument("--agc-target", dest="agc_target", type=float)
        p.add_argument("--clip-pct", dest="clip_pct", type=float)
    if "topo" in groups:
        p.add_argument("--invert", action="store_const", const=True)
        p.add_argument("--levels", type=int)
        p.add_argument("--min-lifetime", dest="min_lifetime", type=float)
        p.add_argument("--mode", choices=("boundary", "filled"))
        p.add_argument("--alpha", type=float)
        p.add_argument("--blend-only", dest="blend_only", action="store_const", const=True)
        p.add_argument("--luma", action="store_const", const=True,
                       help="convert color PNG input with BT.601 weights")
    if "export" in groups:
        p.add_argument("--train-frac", dest="train_frac", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gprtopo", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic B-scan dataset")
    p.add_argument("--out", required=True)
    _add_config_flags(p, ("synth",))
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", help="signal chain and imaging of B-scans")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--dt", type=float, help="sample interval for CSV input (s)")
    p.add_argument("--trace-spacing", type=float, help="trace spacing for CSV input (m)")
    _add_config_flags(p, ("pre",))
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("topo", help="topological feature maps of images")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out", required=True)
    _add_config_flags(p, ("topo",))
    p.set_defaults(func=cmd_topo)

    p = sub.add_parser("export", help="YOLO dataset with a per-origin split")
    p.add_argument("--input", action="append", required=True, metavar="ORIGIN=MANIFEST")
    p.add_argument("--out", required=True)
    _add_config_flags(p, ("export",))
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("eval", help="AP / mAP of predictions against labels")
    p.add_argument("--preds", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", help="report prefix; writes PREFIX.txt and PREFIX.csv")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("pipeline", help="synth, preprocess, topo and export end to end")
    p.add_argument("--out", required=True)
    _add_config_flags(p, ("synth", "pre", "topo", "export"))
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "n", None) is not None and args.n < 1:
        parser.error("--n must be >= 1")
    try:
        return args.func(args)
    except ConfigError as exc:
        parser.error(str(exc))
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
