"""Command-line entry point.

Subcommands: ``codebook build``, ``train``, ``sweep snr``, ``sweep step``,
and ``info``. Exit codes: 0 on success, 2 for configuration problems, 1 for
runtime failures. Given the same config and seed, sweep CSVs are
byte-identical across runs; manifests carry the timestamps instead.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .channel import sample_near_field_channel
from .codebook import (
    CodebookFileError,
    build_near_field_codebook,
    codeword_vector,
    far_field_codebook,
    load_codebook,
    save_codebook,
)
from .config import (
    ConfigError,
    codebook_digest,
    config_digest,
    config_to_dict,
    parse_config,
    resolve_config_path,
)
from .experiments import (
    SCHEME_EXHAUSTIVE,
    SCHEME_FAR_FIELD,
    SCHEME_HIERARCHICAL,
    ExperimentConfig,
    achievable_rate,
    snr_db_to_sigma2,
    sweep_overhead,
    sweep_snr,
)
from .geometry import rayleigh_distance
from .training import exhaustive_training, hierarchical_training

CACHE_ENV = "XLRIS_CACHE"


@dataclass
class RunManifest:
    config_digest: str
    master_seed: int
    artifact_version: str
    created_utc: str
    command: str
    outputs: list[str]

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True) + "\n")


def _utc_now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).replace(microsecond=0).isoformat()


def _load_config(args) -> ExperimentConfig:
    cfg = parse_config(resolve_config_path(args.config))
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, master_seed=args.seed)
    return cfg


def _cache_dir(args) -> Path | None:
    if getattr(args, "cache", None):
        return Path(args.cache)
    env = os.environ.get(CACHE_ENV)
    return Path(env) if env else None


def _cached_codebook_path(cache_dir: Path, cfg) -> Path:
    return cache_dir / f"xlrc_{codebook_digest(cfg)[:16]}.bin"


def _manifest(cfg, command: str, outputs: list[Path]) -> RunManifest:
    return RunManifest(
        config_digest=config_digest(cfg),
        master_seed=cfg.master_seed,
        artifact_version=__version__,
        created_utc=_utc_now(),
        command=command,
        outputs=[str(p) for p in outputs],
    )


def cmd_info(args) -> int:
    if args.aperture_m is not None or args.wavelength_m is not None:
        if args.aperture_m is None or args.wavelength_m is None:
            raise ConfigError("info needs both --aperture-m and --wavelength-m")
        z = rayleigh_distance(args.aperture_m, args.wavelength_m)
        print(f"rayleigh_distance_m: {z!r}")
    if args.config:
        cfg = _load_config(args)
        grid_g, grid_r = cfg.codebook_grids()
        print(f"config_digest: {config_digest(cfg)}")
        print(f"elements: {cfg.scene.dims.n1}x{cfg.scene.dims.n2} = {cfg.scene.dims.n}")
        print(f"grid_points_g: {grid_g.size}")
        print(f"grid_points_r: {grid_r.size}")
        print(f"pre_dedup_pairs: {grid_g.size * grid_r.size}")
    if args.aperture_m is None and not args.config:
        raise ConfigError("info needs --aperture-m/--wavelength-m or --config")
    return 0


def cmd_codebook_build(args) -> int:
    cfg = _load_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cache_dir = _cache_dir(args) or out_dir
    cache_dir.mkdir(parents=True, exist_ok=True)

    grid_g, grid_r = cfg.codebook_grids()
    pre_dedup = grid_g.size * grid_r.size
    path = _cached_codebook_path(cache_dir, cfg)
    if path.exists():
        cb = load_codebook(path, cfg.scene.dims)
        print(f"cache hit: {path}")
    else:
        cb = build_near_field_codebook(grid_g, grid_r, cfg.scene.dims, threads=args.threads)
        save_codebook(cb, path)
        print(f"built and cached: {path}")
    print(f"pre_dedup_pairs: {pre_dedup}")
    print(f"codebook_size_L: {cb.size}")

    manifest = _manifest(cfg, "codebook build", [path])
    manifest_path = out_dir / "codebook_manifest.json"
    manifest.write(manifest_path)
    return 0


def cmd_train(args) -> int:
    cfg = _load_config(args)
    dims = cfg.scene.dims
    sigma2 = snr_db_to_sigma2(args.snr_db)
    channel_ss, noise_ss = np.random.SeedSequence(cfg.master_seed).spawn(2)
    ch = sample_near_field_channel(cfg.scene, np.random.default_rng(channel_ss))
    rng = np.random.default_rng(noise_ss)

    if args.scheme == SCHEME_EXHAUSTIVE:
        cb = build_near_field_codebook(*cfg.codebook_grids(), dims)
        result = exhaustive_training(cb, ch, cfg.scene.s_bar, sigma2, rng)
    elif args.scheme == SCHEME_FAR_FIELD:
        cb = far_field_codebook(dims)
        result = exhaustive_training(cb, ch, cfg.scene.s_bar, sigma2, rng)
    else:
        result = hierarchical_training(
            cfg.hierarchical_config(), dims, ch, cfg.scene.s_bar, sigma2, rng
        )

    theta = codeword_vector(result.best_codeword, dims)
    report = {
        "scheme": args.scheme,
        "snr_db": args.snr_db,
        "seed": cfg.master_seed,
        "best_index": result.best_index,
        "best_amplitude": result.best_amplitude,
        "slots_used": result.slots_used,
        "achievable_rate": achievable_rate(theta, ch, cfg.scene.s_bar, sigma2),
    }
    if result.per_stage is not None:
        report["per_stage"] = [dataclasses.asdict(s) for s in result.per_stage]
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.kind == "snr":
        near_cb = None
        cache_dir = _cache_dir(args)
        if cache_dir is not None and SCHEME_EXHAUSTIVE in cfg.schemes:
            cache_dir.mkdir(parents=True, exist_ok=True)
            path = _cached_codebook_path(cache_dir, cfg)
            if path.exists():
                near_cb = load_codebook(path, cfg.scene.dims)
            else:
                near_cb = build_near_field_codebook(*cfg.codebook_grids(), cfg.scene.dims)
                save_codebook(near_cb, path)
        table = sweep_snr(cfg, threads=args.threads, near_codebook=near_cb)
        stem = "snr_results"
    else:
        table = sweep_overhead(cfg, threads=args.threads)
        stem = "step_results"

    csv_path = out_dir / f"{stem}.csv"
    json_path = out_dir / f"{stem}.json"
    csv_path.write_text(table.to_csv_text())
    json_path.write_text(
        json.dumps(table.to_json_dict(config_to_dict(cfg)), indent=2, sort_keys=True) + "\n"
    )
    manifest = _manifest(cfg, f"sweep {args.kind}", [csv_path, json_path])
    manifest.write(out_dir / "manifest.json")
    print(f"wrote {csv_path}")
    print(f"wrote {json_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xlris",
        description="Beam training simulator for extremely large-scale reflecting surfaces",
    )
    parser.add_argument("--version", action="version", version=f"xlris {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    info = sub.add_parser("info", help="print the far/near field boundary or config facts")
    info.add_argument("--aperture-m", type=float, default=None, help="array aperture in meters")
    info.add_argument("--wavelength-m", type=float, default=None, help="carrier wavelength in meters")
    info.add_argument("--config", default=None, help="config file or builtin name (paper, desk)")
    info.add_argument("--seed", type=int, default=None, help="override the config seed")
    info.set_defaults(func=cmd_info)

    codebook = sub.add_parser("codebook", help="codebook maintenance")
    cb_sub = codebook.add_subparsers(dest="codebook_command", required=True)
    build = cb_sub.add_parser("build", help="build and cache the near-field codebook")
    build.add_argument("--config", required=True)
    build.add_argument("--seed", type=int, default=None)
    build.add_argument("--threads", type=int, default=1)
    build.add_argument("--out", default=".", help="directory for the manifest")
    build.add_argument("--cache", default=None, help=f"cache directory (or ${CACHE_ENV})")
    build.set_defaults(func=cmd_codebook_build)

    train = sub.add_parser("train", help="run one beam training pass on a sampled channel")
    train.add_argument("--config", required=True)
    train.add_argument("--seed", type=int, default=None)
    train.add_argument(
        "--scheme",
        default=SCHEME_EXHAUSTIVE,
        choices=[SCHEME_EXHAUSTIVE, SCHEME_HIERARCHICAL, SCHEME_FAR_FIELD],
    )
    train.add_argument("--snr-db", type=float, default=10.0)
    train.set_defaults(func=cmd_train)

    sweep = sub.add_parser("sweep", help="Monte Carlo sweeps")
    sweep_sub = sweep.add_subparsers(dest="kind", required=True)
    for kind, help_text in (
        ("snr", "achievable rate vs SNR"),
        ("step", "training overhead vs sampling step"),
    ):
        sp = sweep_sub.add_parser(kind, help=help_text)
        sp.add_argument("--config", required=True)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--cache", default=None, help=f"cache directory (or ${CACHE_ENV})")
        sp.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (CodebookFileError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
