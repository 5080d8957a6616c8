"""Command-line pipeline: generate, train, evaluate, export.

A run is described by a flat key=value config (file and/or flags; flags win)
that resolves into one ``RunConfig``. Every artifact a command writes is
deterministic for a fixed seed: no timestamps, no absolute paths, stable key
order, and 17-significant-digit floats.

Exit codes: 0 success, 2 usage, 3 sampling failure, 4 data/config error,
5 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, replace

import numpy as np

from .analysis import (
    build_distance_map,
    build_encoding_report,
    build_heatmaps,
    cluster_separation_ratio,
    heatmap_csv_text,
    heatmap_pgm_bytes,
    report_json_dict,
)
from .datagen import (
    JOINT_NAMES,
    ChainSpec,
    NormalizationParams,
    SamplingError,
    apply_normalization,
    fit_normalization,
    load_csv,
    save_csv,
    synthesize_self_touch,
)
from .fileio import ParseError, atomic_write_bytes, atomic_write_text, dump_json, format_float
from .lattice import LatticeSpec
from .mrf import (
    BODY_GROUPS,
    MrfConfig,
    ReceptiveFieldMask,
    default_quadrant_mask,
    load_mask,
    masked_quantization_error,
    masked_topographic_error,
    mrf_train,
)
from .som import Codebook, TrainSchedule, init_codebook, quantization_error, topographic_error, train

MODES = ("som", "mrf")

DEFAULT_MASK = "default"
SYNTH_PREFIX = "synthesize:"


@dataclass(frozen=True)
class RunConfig:
    """Everything one pipeline run depends on, resolved and validated."""

    mode: str = "mrf"
    seed: int = 0
    out: str = ""
    dataset: str = ""
    mask: str = DEFAULT_MASK
    n: int = 3216
    max_attempts: int | None = None
    combination_threshold: float = 0.25
    lattice: LatticeSpec = LatticeSpec()
    schedule: TrainSchedule = TrainSchedule()
    mrf_config: MrfConfig = MrfConfig()
    chain: ChainSpec = ChainSpec()

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")


def _parse_float(text: str) -> float:
    value = float(text)
    if not np.isfinite(value):
        raise ValueError(f"non-finite value {text!r}")
    return value


def _parse_vector(text: str, length: int) -> tuple[float, ...]:
    parts = text.split(",")
    if len(parts) != length:
        raise ValueError(f"expected {length} comma-separated values, got {len(parts)}")
    return tuple(_parse_float(p) for p in parts)


def parse_config_file(path) -> dict[str, str]:
    """Flat key=value lines; ``#`` comments and blank lines ignored."""
    flat: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(f"{path}: line {lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if not key:
                raise ParseError(f"{path}: line {lineno}: empty key")
            if key in flat:
                raise ParseError(f"{path}: line {lineno}: duplicate key {key!r}")
            flat[key] = value
    return flat


def _config_defaults() -> dict[str, str]:
    return run_config_items(RunConfig())


def build_run_config(flat: dict[str, str]) -> RunConfig:
    """Typed RunConfig from a merged flat key=value mapping."""
    merged = _config_defaults()
    for key, value in flat.items():
        if key not in merged:
            raise ValueError(f"unknown config key {key!r}")
        merged[key] = value

    def req(key: str):
        return merged[key]

    try:
        limits = tuple(
            _parse_vector(req(f"chain.limit.{name}"), 2) for name in JOINT_NAMES
        )
        axes = req("chain.axes").split(",")
        chain = ChainSpec(
            joint_limits=limits,
            shoulder_offset=_parse_vector(req("chain.shoulder_offset"), 3),
            upper_arm=_parse_float(req("chain.upper_arm")),
            forearm_hand=_parse_float(req("chain.forearm_hand")),
            face_target=_parse_vector(req("chain.face_target"), 3),
            touch_radius=_parse_float(req("chain.touch_radius")),
            joint_axes=tuple(axes),
        )
        lattice = LatticeSpec(
            rows=int(req("lattice.rows")),
            cols=int(req("lattice.cols")),
            layout=req("lattice.layout"),
            metric=req("lattice.metric"),
        )
        seed = int(req("seed"))
        schedule = TrainSchedule(
            epochs=int(req("schedule.epochs")),
            alpha0=_parse_float(req("schedule.alpha0")),
            alpha_end=_parse_float(req("schedule.alpha_end")),
            sigma0=_parse_float(req("schedule.sigma0")),
            sigma_end=_parse_float(req("schedule.sigma_end")),
            decay=req("schedule.decay"),
            seed=seed,
        )
        mrf_config = MrfConfig(
            bmu_scope=req("mrf.bmu_scope"),
            distance_normalization=req("mrf.distance_normalization"),
        )
        raw_attempts = req("max_attempts")
        return RunConfig(
            mode=req("mode"),
            seed=seed,
            out=req("out"),
            dataset=req("dataset"),
            mask=req("mask"),
            n=int(req("n")),
            max_attempts=None if raw_attempts == "auto" else int(raw_attempts),
            combination_threshold=_parse_float(req("combination_threshold")),
            lattice=lattice,
            schedule=schedule,
            mrf_config=mrf_config,
            chain=chain,
        )
    except ValueError as exc:
        raise ValueError(f"invalid configuration: {exc}") from None


def run_config_items(cfg: RunConfig) -> dict[str, str]:
    """Canonical flat view of a RunConfig (the reproducibility manifest)."""
    items: dict[str, str] = {
        "mode": cfg.mode,
        "seed": str(cfg.seed),
        "out": cfg.out,
        "dataset": cfg.dataset,
        "mask": cfg.mask,
        "n": str(cfg.n),
        "max_attempts": "auto" if cfg.max_attempts is None else str(cfg.max_attempts),
        "combination_threshold": format_float(cfg.combination_threshold),
        "lattice.rows": str(cfg.lattice.rows),
        "lattice.cols": str(cfg.lattice.cols),
        "lattice.layout": cfg.lattice.layout,
        "lattice.metric": cfg.lattice.metric,
        "schedule.epochs": str(cfg.schedule.epochs),
        "schedule.alpha0": format_float(cfg.schedule.alpha0),
        "schedule.alpha_end": format_float(cfg.schedule.alpha_end),
        "schedule.sigma0": format_float(cfg.schedule.sigma0),
        "schedule.sigma_end": format_float(cfg.schedule.sigma_end),
        "schedule.decay": cfg.schedule.decay,
        "mrf.bmu_scope": cfg.mrf_config.bmu_scope,
        "mrf.distance_normalization": cfg.mrf_config.distance_normalization,
        "chain.shoulder_offset": ",".join(format_float(v) for v in cfg.chain.shoulder_offset),
        "chain.upper_arm": format_float(cfg.chain.upper_arm),
        "chain.forearm_hand": format_float(cfg.chain.forearm_hand),
        "chain.face_target": ",".join(format_float(v) for v in cfg.chain.face_target),
        "chain.touch_radius": format_float(cfg.chain.touch_radius),
        "chain.axes": ",".join(cfg.chain.joint_axes),
    }
    for name, (lo, hi) in zip(JOINT_NAMES, cfg.chain.joint_limits):
        items[f"chain.limit.{name}"] = f"{format_float(lo)},{format_float(hi)}"
    return items


@dataclass
class Model:
    """A trained map plus everything needed to reuse it."""

    mode: str
    codebook: Codebook
    mask: ReceptiveFieldMask | None
    mrf_config: MrfConfig
    normalization: NormalizationParams
    schedule: TrainSchedule
    joints: tuple[str, ...]
    run_config: dict[str, str]


def _mask_to_dict(mask: ReceptiveFieldMask | None):
    if mask is None:
        return None
    return {
        "rows": mask.rows,
        "cols": mask.cols,
        "mask": [[int(v) for v in row] for row in mask.mask],
        "groups": list(mask.groups) if mask.groups is not None else None,
    }


def model_to_dict(model: Model) -> dict:
    return {
        "format": "rfsom-model",
        "version": 1,
        "mode": model.mode,
        "joints": list(model.joints),
        "lattice": {
            "rows": model.codebook.lattice.rows,
            "cols": model.codebook.lattice.cols,
            "layout": model.codebook.lattice.layout,
            "metric": model.codebook.lattice.metric,
        },
        "mrf_config": {
            "bmu_scope": model.mrf_config.bmu_scope,
            "distance_normalization": model.mrf_config.distance_normalization,
        },
        "schedule": {
            "epochs": model.schedule.epochs,
            "alpha0": model.schedule.alpha0,
            "alpha_end": model.schedule.alpha_end,
            "sigma0": model.schedule.sigma0,
            "sigma_end": model.schedule.sigma_end,
            "decay": model.schedule.decay,
            "seed": model.schedule.seed,
        },
        "normalization": {
            "mean": [float(v) for v in model.normalization.mean],
            "std": [float(v) for v in model.normalization.std],
        },
        "mask": _mask_to_dict(model.mask),
        "codebook": [[float(v) for v in row] for row in model.codebook.weights],
        "run_config": model.run_config,
    }


def save_model(model: Model, path) -> None:
    atomic_write_text(path, dump_json(model_to_dict(model)))


def _expect(doc: dict, key: str, kinds, path) -> object:
    if key not in doc:
        raise ParseError(f"{path}: missing key {key!r}")
    value = doc[key]
    if not isinstance(value, kinds):
        raise ParseError(f"{path}: key {key!r} has unexpected type {type(value).__name__}")
    return value


def load_model(path) -> Model:
    """Strict reader for the model JSON; malformed content raises ParseError."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: model document must be a JSON object")
    if doc.get("format") != "rfsom-model":
        raise ParseError(f"{path}: not a model file (format={doc.get('format')!r})")
    if doc.get("version") != 1:
        raise ParseError(f"{path}: unsupported model version {doc.get('version')!r}")
    mode = _expect(doc, "mode", str, path)
    if mode not in MODES:
        raise ParseError(f"{path}: unknown mode {mode!r}")
    joints = tuple(_expect(doc, "joints", list, path))
    lat = _expect(doc, "lattice", dict, path)
    sched = _expect(doc, "schedule", dict, path)
    norm = _expect(doc, "normalization", dict, path)
    mcfg = _expect(doc, "mrf_config", dict, path)
    weights = _expect(doc, "codebook", list, path)
    run_config = {str(k): str(v) for k, v in _expect(doc, "run_config", dict, path).items()}
    try:
        lattice = LatticeSpec(
            rows=int(lat["rows"]),
            cols=int(lat["cols"]),
            layout=str(lat["layout"]),
            metric=str(lat["metric"]),
        )
        schedule = TrainSchedule(
            epochs=int(sched["epochs"]),
            alpha0=float(sched["alpha0"]),
            alpha_end=float(sched["alpha_end"]),
            sigma0=float(sched["sigma0"]),
            sigma_end=float(sched["sigma_end"]),
            decay=str(sched["decay"]),
            seed=int(sched["seed"]),
        )
        mrf_config = MrfConfig(
            bmu_scope=str(mcfg["bmu_scope"]),
            distance_normalization=str(mcfg["distance_normalization"]),
        )
        normalization = NormalizationParams(
            np.array(norm["mean"], dtype=np.float64),
            np.array(norm["std"], dtype=np.float64),
        )
        codebook = Codebook(np.array(weights, dtype=np.float64), lattice)
        raw_mask = doc.get("mask")
        mask = None
        if raw_mask is not None:
            if not isinstance(raw_mask, dict):
                raise ParseError(f"{path}: key 'mask' has unexpected type")
            groups = raw_mask.get("groups")
            mask = ReceptiveFieldMask(
                rows=int(raw_mask["rows"]),
                cols=int(raw_mask["cols"]),
                mask=np.array(raw_mask["mask"]),
                groups=tuple(str(g) for g in groups) if groups is not None else None,
            )
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: malformed model: {exc}") from None
    if len(joints) != codebook.dims:
        raise ParseError(f"{path}: {len(joints)} joint names for {codebook.dims} dims")
    if mask is not None and mask.mask.shape != codebook.weights.shape:
        raise ParseError(f"{path}: mask shape does not match codebook shape")
    return Model(
        mode=mode,
        codebook=codebook,
        mask=mask,
        mrf_config=mrf_config,
        normalization=normalization,
        schedule=schedule,
        joints=tuple(str(j) for j in joints),
        run_config=run_config,
    )


def _resolve_mask(cfg: RunConfig, dims: int) -> ReceptiveFieldMask:
    if cfg.mask == DEFAULT_MASK:
        mask = default_quadrant_mask()
    else:
        if not os.path.exists(cfg.mask):
            raise ValueError(f"mask file does not exist: {cfg.mask}")
        mask = load_mask(cfg.mask)
    if mask.mask.shape != (cfg.lattice.n_neurons, dims):
        raise ValueError(
            f"mask shape {mask.mask.shape} does not fit lattice "
            f"{cfg.lattice.rows}x{cfg.lattice.cols} with {dims} input dims"
        )
    if (mask.rows, mask.cols) != (cfg.lattice.rows, cfg.lattice.cols):
        raise ValueError(
            f"mask grid {mask.rows}x{mask.cols} does not match lattice "
            f"{cfg.lattice.rows}x{cfg.lattice.cols}"
        )
    return mask


def _load_dataset(cfg: RunConfig) -> np.ndarray:
    source = cfg.dataset
    if not source:
        raise ValueError("no dataset configured (path or synthesize:<n>)")
    if source.startswith(SYNTH_PREFIX):
        n = int(source[len(SYNTH_PREFIX) :])
        return synthesize_self_touch(cfg.chain, n, cfg.seed, cfg.max_attempts).data
    if not os.path.exists(source):
        raise ValueError(f"dataset file does not exist: {source}")
    return load_csv(source)


def _ensure_out(cfg: RunConfig) -> str:
    if not cfg.out:
        raise ValueError("no output directory configured (out=<dir>)")
    os.makedirs(cfg.out, exist_ok=True)
    return cfg.out


def _chain_dict(chain: ChainSpec) -> dict:
    return {
        "joint_limits": [[lo, hi] for lo, hi in chain.joint_limits],
        "shoulder_offset": list(chain.shoulder_offset),
        "upper_arm": chain.upper_arm,
        "forearm_hand": chain.forearm_hand,
        "face_target": list(chain.face_target),
        "touch_radius": chain.touch_radius,
        "joint_axes": list(chain.joint_axes),
    }


def cmd_generate(cfg: RunConfig) -> int:
    """Sample self-touch configurations; write dataset.csv and a manifest."""
    result = synthesize_self_touch(cfg.chain, cfg.n, cfg.seed, cfg.max_attempts)
    out = _ensure_out(cfg)
    save_csv(result.data, os.path.join(out, "dataset.csv"))
    manifest = {
        "format": "rfsom-generate-manifest",
        "version": 1,
        "n": cfg.n,
        "seed": cfg.seed,
        "attempts": result.attempts,
        "acceptance_rate": result.acceptance_rate,
        "dataset": "dataset.csv",
        "chain": _chain_dict(cfg.chain),
    }
    atomic_write_text(os.path.join(out, "generate_manifest.json"), dump_json(manifest))
    print(
        f"generated {cfg.n} samples in {result.attempts} attempts "
        f"(acceptance rate {result.acceptance_rate:.3e}) -> {out}/dataset.csv"
    )
    return 0


def cmd_train(cfg: RunConfig) -> int:
    """Normalize the dataset, train the configured map, write model + log."""
    raw = _load_dataset(cfg)
    if raw.shape[0] < 2:
        raise ValueError(f"training needs at least 2 samples, got {raw.shape[0]}")
    dims = raw.shape[1]
    mask = _resolve_mask(cfg, dims) if cfg.mode == "mrf" else None
    normalization = fit_normalization(raw)
    data = apply_normalization(raw, normalization)
    codebook = init_codebook(cfg.lattice, dims, cfg.seed)
    if cfg.mode == "mrf":
        trained, log = mrf_train(codebook, data, mask, cfg.schedule, cfg.mrf_config)
    else:
        trained, log = train(codebook, data, cfg.schedule)
    out = _ensure_out(cfg)
    joints = JOINT_NAMES if dims == len(JOINT_NAMES) else tuple(f"dim_{j}" for j in range(dims))
    model = Model(
        mode=cfg.mode,
        codebook=trained,
        mask=mask,
        mrf_config=cfg.mrf_config,
        normalization=normalization,
        schedule=cfg.schedule,
        joints=joints,
        run_config=run_config_items(cfg),
    )
    save_model(model, os.path.join(out, "model.json"))
    lines = ["epoch,quantization_error,topographic_error"]
    for epoch, (qe, te) in enumerate(
        zip(log.quantization_errors, log.topographic_errors), start=1
    ):
        lines.append(f"{epoch},{format_float(qe)},{format_float(te)}")
    atomic_write_text(os.path.join(out, "train_log.csv"), "\n".join(lines) + "\n")
    final = log.quantization_errors[-1] if log.quantization_errors else float("nan")
    print(
        f"trained {cfg.mode} map ({cfg.lattice.rows}x{cfg.lattice.cols}, "
        f"{cfg.schedule.epochs} epochs, final QE {final:.6g}) -> {out}/model.json"
    )
    return 0


def _model_metrics(model: Model, data: np.ndarray) -> tuple[float, float]:
    codebook = model.codebook
    if model.mode == "mrf" and model.mask is not None:
        qe = masked_quantization_error(codebook, data, model.mask, model.mrf_config)
        te = masked_topographic_error(codebook, data, model.mask, model.mrf_config)
    else:
        qe = quantization_error(codebook, data)
        te = topographic_error(codebook, data)
    return qe, te


def _report_threshold(model: Model) -> float:
    raw = model.run_config.get("combination_threshold", "0.25")
    try:
        return float(raw)
    except ValueError:
        return 0.25


def _separation_ratio(model: Model) -> float | None:
    if model.mask is None or model.mask.groups is None:
        return None
    if any(g not in model.mask.group_order() for g in BODY_GROUPS):
        return None
    report = build_encoding_report(model.codebook, model.mask, _report_threshold(model))
    return cluster_separation_ratio(report)


def cmd_evaluate(cfg: RunConfig, model_path: str, dataset_path: str) -> int:
    """Score a model on a dataset; write metrics.json."""
    if not os.path.exists(model_path):
        raise ValueError(f"model file does not exist: {model_path}")
    model = load_model(model_path)
    data_cfg = replace(cfg, dataset=dataset_path)
    raw = _load_dataset(data_cfg)
    if raw.shape[1] != model.codebook.dims:
        raise ValueError(
            f"dataset has {raw.shape[1]} columns, model expects {model.codebook.dims}"
        )
    data = apply_normalization(raw, model.normalization)
    qe, te = _model_metrics(model, data)
    ratio = _separation_ratio(model)
    out = _ensure_out(cfg)
    metrics = {
        "format": "rfsom-metrics",
        "version": 1,
        "n_samples": int(raw.shape[0]),
        "quantization_error": qe,
        "topographic_error": te,
        "cluster_separation_ratio": ratio,
        "cluster_separation_reference": 0.5,
    }
    atomic_write_text(os.path.join(out, "metrics.json"), dump_json(metrics))
    print(f"quantization_error {qe:.6g}, topographic_error {te:.6g} -> {out}/metrics.json")
    return 0


def cmd_export(cfg: RunConfig, model_path: str) -> int:
    """Write heatmap CSV/PGM sets and the distance-map + encoding report."""
    if not os.path.exists(model_path):
        raise ValueError(f"model file does not exist: {model_path}")
    model = load_model(model_path)
    mask = model.mask
    if mask is None:
        # unrestricted map: analysis runs over an all-true field, no groups
        mask = ReceptiveFieldMask(
            model.codebook.lattice.rows,
            model.codebook.lattice.cols,
            np.ones_like(model.codebook.weights, dtype=bool),
        )
    heatmaps = build_heatmaps(model.codebook, mask)
    dmap = build_distance_map(model.codebook, mask)
    report = build_encoding_report(model.codebook, mask, _report_threshold(model))
    ratio = _separation_ratio(model)
    out = _ensure_out(cfg)
    for j, joint in enumerate(heatmaps.joints):
        grid = heatmaps.grids[j]
        connected = heatmaps.connected[j]
        atomic_write_text(
            os.path.join(out, f"heatmap_{joint}.csv"), heatmap_csv_text(grid, connected)
        )
        image, sidecar = heatmap_pgm_bytes(grid, connected)
        atomic_write_bytes(os.path.join(out, f"heatmap_{joint}.pgm"), image)
        atomic_write_bytes(os.path.join(out, f"heatmap_{joint}.mask.pgm"), sidecar)
    doc = {"format": "rfsom-report", "version": 1}
    doc.update(report_json_dict(report, dmap))
    doc["cluster_separation_ratio"] = ratio
    doc["cluster_separation_reference"] = 0.5
    atomic_write_text(os.path.join(out, "report.json"), dump_json(doc))
    print(f"exported {len(heatmaps.joints)} heatmap sets and report.json -> {out}")
    return 0


_FLAG_TO_KEY = {
    "mode": "mode",
    "seed": "seed",
    "out": "out",
    "dataset": "dataset",
    "mask": "mask",
    "n": "n",
    "max_attempts": "max_attempts",
    "combination_threshold": "combination_threshold",
    "rows": "lattice.rows",
    "cols": "lattice.cols",
    "layout": "lattice.layout",
    "metric": "lattice.metric",
    "epochs": "schedule.epochs",
    "alpha0": "schedule.alpha0",
    "alpha_end": "schedule.alpha_end",
    "sigma0": "schedule.sigma0",
    "sigma_end": "schedule.sigma_end",
    "decay": "schedule.decay",
    "bmu_scope": "mrf.bmu_scope",
    "distance_normalization": "mrf.distance_normalization",
    "upper_arm": "chain.upper_arm",
    "forearm_hand": "chain.forearm_hand",
    "shoulder_offset": "chain.shoulder_offset",
    "face_target": "chain.face_target",
    "touch_radius": "chain.touch_radius",
}


def _add_common_flags(sub: argparse.ArgumentParser, flags: tuple[str, ...]) -> None:
    defaults = _config_defaults()
    helps = {
        "mode": "map variant to train: som (unrestricted) or mrf (masked)",
        "seed": "run seed; drives sampling, weight init, and shuffling",
        "out": "output directory (created if missing)",
        "dataset": "dataset CSV path, or synthesize:<n> to sample in-memory",
        "mask": f"receptive-field mask file, or '{DEFAULT_MASK}' for the built-in "
        "4x4 quadrant mask over the 7 joints",
        "n": "number of samples to generate",
        "max_attempts": "cap on sampling attempts ('auto' = 20000 per row)",
        "combination_threshold": "relative |weight| cutoff for combination coding",
        "rows": "lattice rows",
        "cols": "lattice cols",
        "layout": "lattice layout: hex-offset or rectangular",
        "metric": "lattice distance: manhattan or hex-axial",
        "epochs": "training epochs",
        "alpha0": "initial learning rate",
        "alpha_end": "final learning rate",
        "sigma0": "initial neighborhood radius",
        "sigma_end": "final neighborhood radius",
        "decay": "schedule decay: exponential or linear",
        "bmu_scope": "winner search: global-masked or per-group",
        "distance_normalization": "masked distance scaling: rms-per-active-dim or unnormalized",
        "upper_arm": "upper-arm link length (m)",
        "forearm_hand": "forearm+hand link length (m)",
        "shoulder_offset": "shoulder position in torso frame, 'x,y,z' (m)",
        "face_target": "face target in head frame, 'x,y,z' (m)",
        "touch_radius": "touch acceptance radius (m)",
    }
    for flag in flags:
        key = _FLAG_TO_KEY[flag]
        sub.add_argument(
            "--" + flag.replace("_", "-"),
            dest=flag,
            metavar="V",
            help=f"{helps[flag]} (default: {defaults[key] or 'none'})",
        )


def _merge_config(args: argparse.Namespace) -> RunConfig:
    flat: dict[str, str] = {}
    if getattr(args, "config", None):
        if not os.path.exists(args.config):
            raise ValueError(f"config file does not exist: {args.config}")
        flat.update(parse_config_file(args.config))
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ValueError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        flat[key.strip()] = value.strip()
    for flag, key in _FLAG_TO_KEY.items():
        value = getattr(args, flag, None)
        if value is not None:
            flat[key] = value
    return build_run_config(flat)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rfsom",
        description=(
            "Self-organizing map with restricted receptive fields on synthetic "
            "self-touch joint data. Defaults: 4x4 hexagonal lattice, 7 joint "
            "angles, built-in overlapping quadrant mask."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    common = ("seed", "out")
    config_help = "flat key=value config file (flags override file values)"
    set_help = "override any config key, e.g. --set chain.limit.wrist=-1.0,1.0 (repeatable)"

    p_gen = sub.add_parser("generate", help="sample self-touch configurations to CSV")
    p_gen.add_argument("--config", help=config_help)
    p_gen.add_argument("--set", action="append", metavar="K=V", help=set_help)
    _add_common_flags(
        p_gen,
        common
        + (
            "n",
            "max_attempts",
            "upper_arm",
            "forearm_hand",
            "shoulder_offset",
            "face_target",
            "touch_radius",
        ),
    )
    p_gen.set_defaults(func=lambda cfg, args: cmd_generate(cfg))

    p_train = sub.add_parser("train", help="train a map on a dataset")
    p_train.add_argument("--config", help=config_help)
    p_train.add_argument("--set", action="append", metavar="K=V", help=set_help)
    _add_common_flags(
        p_train,
        common
        + (
            "dataset",
            "mode",
            "mask",
            "rows",
            "cols",
            "layout",
            "metric",
            "epochs",
            "alpha0",
            "alpha_end",
            "sigma0",
            "sigma_end",
            "decay",
            "bmu_scope",
            "distance_normalization",
            "combination_threshold",
        ),
    )
    p_train.set_defaults(func=lambda cfg, args: cmd_train(cfg))

    p_eval = sub.add_parser("evaluate", help="score a trained model on a dataset")
    p_eval.add_argument("--config", help=config_help)
    p_eval.add_argument("--set", action="append", metavar="K=V", help=set_help)
    p_eval.add_argument("--model", required=True, help="trained model.json")
    p_eval.add_argument("--dataset-path", dest="eval_dataset", required=True, help="dataset CSV")
    _add_common_flags(p_eval, common)
    p_eval.set_defaults(func=lambda cfg, args: cmd_evaluate(cfg, args.model, args.eval_dataset))

    p_export = sub.add_parser("export", help="write heatmaps, distance map, and report")
    p_export.add_argument("--config", help=config_help)
    p_export.add_argument("--set", action="append", metavar="K=V", help=set_help)
    p_export.add_argument("--model", required=True, help="trained model.json")
    _add_common_flags(p_export, common)
    p_export.set_defaults(func=lambda cfg, args: cmd_export(cfg, args.model))

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help
        return int(exc.code or 0)
    try:
        cfg = _merge_config(args)
        return args.func(cfg, args)
    except SamplingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5


def run() -> None:
    sys.exit(main())
