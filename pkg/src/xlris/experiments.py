"""Monte Carlo harness: rate-vs-SNR and overhead-vs-step sweeps.

All schemes in a trial share one channel realization (common random
numbers), and each scheme reuses the same noise substream at every SNR
point, so curves differ only where the physics differs, not where the dice
do. Results are a pure function of the experiment config.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization, SceneConfig, sample_near_field_channel
from .codebook import (
    SampleGrid,
    axis_samples,
    build_near_field_codebook,
    codeword_vector,
    far_field_codebook,
)
from .training import (
    HierarchicalConfig,
    hierarchical_training,
    perfect_csi_beamforming,
    select_codeword,
)

SCHEME_FAR_FIELD = "far-field"
SCHEME_EXHAUSTIVE = "near-field-exhaustive"
SCHEME_HIERARCHICAL = "near-field-hierarchical"
SCHEME_PERFECT_CSI = "perfect-csi"
ALL_SCHEMES = (
    SCHEME_FAR_FIELD,
    SCHEME_EXHAUSTIVE,
    SCHEME_HIERARCHICAL,
    SCHEME_PERFECT_CSI,
)

SWEEP_SNR_DB = "snr_db"
SWEEP_STEP_D = "step_d"

CSV_COLUMNS = ("scheme", "sweep_var", "sweep_value", "mean", "stderr", "trials", "seed")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a sweep needs; lengths are wavelength-normalized here."""

    scene: SceneConfig
    schemes: tuple[str, ...] = ALL_SCHEMES
    snr_grid_db: tuple[float, ...] = (-10.0, -5.0, 0.0, 5.0, 10.0)
    sampling_step: float = 50.0
    step_sweep: tuple[float, ...] = (25.0, 50.0, 75.0, 100.0)
    levels: int = 2
    step_multiplier: float = 4.0
    step_control: float = 0.25
    trials: int = 200
    master_seed: int = 0
    bs_antennas: int = 64  # reporting metadata only; the BS reduces to s_bar
    perfect_csi_literal_scaling: bool = False

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        for scheme in self.schemes:
            if scheme not in ALL_SCHEMES:
                raise ValueError(f"unknown scheme {scheme!r}; expected one of {ALL_SCHEMES}")
        if not self.sampling_step > 0:
            raise ValueError(f"sampling step must be positive, got {self.sampling_step}")
        for s in self.step_sweep:
            if not s > 0:
                raise ValueError(f"step sweep values must be positive, got {s}")

    def codebook_grids(self, sampling_step: float | None = None) -> tuple[SampleGrid, SampleGrid]:
        step = self.sampling_step if sampling_step is None else sampling_step
        steps = (step, step, step)
        return (
            SampleGrid.from_box(self.scene.box_g, steps),
            SampleGrid.from_box(self.scene.box_r, steps),
        )

    def hierarchical_config(self, sampling_step: float | None = None) -> HierarchicalConfig:
        step = self.sampling_step if sampling_step is None else sampling_step
        return HierarchicalConfig(
            levels=self.levels,
            box_g=self.scene.box_g,
            box_r=self.scene.box_r,
            base_steps_g=(step, step, step),
            base_steps_r=(step, step, step),
            step_multiplier=self.step_multiplier,
            step_control=self.step_control,
        )


@dataclass(frozen=True)
class ResultRow:
    scheme: str
    sweep_var: str
    sweep_value: float
    mean: float
    stderr: float
    trials: int
    seed: int


@dataclass
class ResultTable:
    rows: list[ResultRow] = field(default_factory=list)

    def find(self, scheme: str, sweep_value: float) -> ResultRow:
        for row in self.rows:
            if row.scheme == scheme and row.sweep_value == sweep_value:
                return row
        raise ValueError(f"no row for scheme={scheme!r} at sweep value {sweep_value}")

    def to_csv_text(self) -> str:
        lines = [",".join(CSV_COLUMNS)]
        for r in self.rows:
            lines.append(
                f"{r.scheme},{r.sweep_var},{r.sweep_value!r},{r.mean!r},"
                f"{r.stderr!r},{r.trials},{r.seed}"
            )
        return "\n".join(lines) + "\n"

    def to_json_dict(self, config_dict: dict | None = None) -> dict:
        out = {"rows": [dataclasses.asdict(r) for r in self.rows]}
        if config_dict is not None:
            out["config"] = config_dict
        return out


def achievable_rate(
    theta: np.ndarray, ch: ChannelRealization, s_bar: complex, sigma2: float
) -> float:
    """log2(1 + |theta^T h_bar s_bar|^2 / sigma2), bits/s/Hz; no noise draw."""
    if not sigma2 > 0:
        raise ValueError(f"rate is undefined for sigma2 <= 0, got {sigma2}")
    gain = abs(complex(np.asarray(theta) @ ch.h_bar) * complex(s_bar))
    return float(math.log2(1.0 + gain * gain / sigma2))


def snr_db_to_sigma2(snr_db: float) -> float:
    """SNR is 1/sigma2, so sigma2 = 10^(-SNR_dB/10)."""
    return float(10.0 ** (-snr_db / 10.0))


def sweep_snr(cfg: ExperimentConfig, threads: int = 1, near_codebook=None) -> ResultTable:
    """Mean achievable rate per (scheme, SNR) over `cfg.trials` shared channels.

    Per trial, every scheme trains on the same channel realization; per
    scheme, the same noise substream is replayed at every SNR point (scaled
    by sigma), which pairs the curves across the sweep axis. A prebuilt
    `near_codebook` (e.g. loaded from the cache) skips the exhaustive build.
    """
    if not cfg.snr_grid_db:
        raise ValueError("SNR grid must be nonempty for a rate sweep")
    scene = cfg.scene
    dims = scene.dims
    sigma2s = [snr_db_to_sigma2(s) for s in cfg.snr_grid_db]

    near_cb = near_codebook
    far_cb = None
    stage1_cb = None
    hcfg = None
    if SCHEME_EXHAUSTIVE in cfg.schemes and near_cb is None:
        near_cb = build_near_field_codebook(*cfg.codebook_grids(), dims)
    if SCHEME_FAR_FIELD in cfg.schemes:
        far_cb = far_field_codebook(dims)
    if SCHEME_HIERARCHICAL in cfg.schemes:
        hcfg = cfg.hierarchical_config()
        stage1_cb = build_near_field_codebook(*hcfg.stage1_grids(), dims)

    rates = {scheme: np.zeros((len(sigma2s), cfg.trials)) for scheme in cfg.schemes}
    trial_seeds = np.random.SeedSequence(cfg.master_seed).spawn(cfg.trials)

    def run_trial(t: int) -> None:
        streams = trial_seeds[t].spawn(1 + len(cfg.schemes))
        ch = sample_near_field_channel(scene, np.random.default_rng(streams[0]))
        for si, scheme in enumerate(cfg.schemes):
            noise_seed = streams[1 + si]
            if scheme == SCHEME_PERFECT_CSI:
                theta = perfect_csi_beamforming(ch)
                if cfg.perfect_csi_literal_scaling:
                    theta = theta / np.sqrt(dims.n)
                for k, sigma2 in enumerate(sigma2s):
                    rates[scheme][k, t] = achievable_rate(theta, ch, scene.s_bar, sigma2)
            elif scheme == SCHEME_HIERARCHICAL:
                for k, sigma2 in enumerate(sigma2s):
                    rng = np.random.default_rng(noise_seed)
                    result = hierarchical_training(
                        hcfg, dims, ch, scene.s_bar, sigma2, rng, stage1_codebook=stage1_cb
                    )
                    theta = codeword_vector(result.best_codeword, dims)
                    rates[scheme][k, t] = achievable_rate(theta, ch, scene.s_bar, sigma2)
            else:
                cb = near_cb if scheme == SCHEME_EXHAUSTIVE else far_cb
                responses = cb.responses(ch.h_bar)
                for k, sigma2 in enumerate(sigma2s):
                    rng = np.random.default_rng(noise_seed)
                    idx, _ = select_codeword(responses, scene.s_bar, sigma2, rng)
                    rates[scheme][k, t] = achievable_rate(cb.vector(idx), ch, scene.s_bar, sigma2)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_trial, range(cfg.trials)))
    else:
        for t in range(cfg.trials):
            run_trial(t)

    table = ResultTable()
    for scheme in cfg.schemes:
        for k, snr in enumerate(cfg.snr_grid_db):
            per_trial = rates[scheme][k]
            stderr = float(per_trial.std(ddof=1) / np.sqrt(cfg.trials)) if cfg.trials > 1 else 0.0
            table.rows.append(
                ResultRow(
                    scheme=scheme,
                    sweep_var=SWEEP_SNR_DB,
                    sweep_value=float(snr),
                    mean=float(per_trial.mean()),
                    stderr=stderr,
                    trials=cfg.trials,
                    seed=cfg.master_seed,
                )
            )
    return table


def hierarchical_overhead(cfg: ExperimentConfig, sampling_step: float | None = None) -> int:
    """Slots a hierarchical run consumes, independent of channel and seed.

    Level 1 is counted exactly (its grids are fixed, so its deduplicated
    size is known). Later levels depend on where the winner lands, so they
    are counted at the worst case: full-width refinement windows, no
    clipping, no duplicate pairs.
    """
    hcfg = cfg.hierarchical_config(sampling_step)
    total = build_near_field_codebook(*hcfg.stage1_grids(), cfg.scene.dims).size
    steps_g, steps_r = hcfg.initial_steps()
    for _ in range(2, hcfg.levels + 1):
        next_g = hcfg.step_control * steps_g
        next_r = hcfg.step_control * steps_r
        count_g = int(np.prod([len(axis_samples(0.0, w, s)) for w, s in zip(steps_g, next_g)]))
        count_r = int(np.prod([len(axis_samples(0.0, w, s)) for w, s in zip(steps_r, next_r)]))
        total += count_g * count_r
        steps_g, steps_r = next_g, next_r
    return total


def sweep_overhead(cfg: ExperimentConfig, threads: int = 1) -> ResultTable:
    """Training overhead per sampling step: exhaustive L vs hierarchical sum L_k.

    Channel- and seed-independent by construction; the sweep values are
    reported in multiples of the element spacing, matching how sampling
    steps are usually quoted.
    """
    if not cfg.step_sweep:
        raise ValueError("step sweep must be nonempty")
    d = cfg.scene.dims.d
    table = ResultTable()
    for step in cfg.step_sweep:
        full = build_near_field_codebook(*cfg.codebook_grids(step), cfg.scene.dims, threads=threads)
        hier = hierarchical_overhead(cfg, step)
        for scheme, overhead in (
            (SCHEME_EXHAUSTIVE, full.size),
            (SCHEME_HIERARCHICAL, hier),
        ):
            table.rows.append(
                ResultRow(
                    scheme=scheme,
                    sweep_var=SWEEP_STEP_D,
                    sweep_value=float(step / d),
                    mean=float(overhead),
                    stderr=0.0,
                    trials=1,
                    seed=cfg.master_seed,
                )
            )
    return table


def summarize_ratio(
    table: ResultTable, scheme_a: str, scheme_b: str, sweep_value: float
) -> float:
    """mean(scheme_a) / mean(scheme_b) at one sweep point."""
    return table.find(scheme_a, sweep_value).mean / table.find(scheme_b, sweep_value).mean
