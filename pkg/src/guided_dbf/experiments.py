"""Monte Carlo scenario harness.

Every study is a named, seeded sweep over a parameter grid that emits a
tabular result: one row per (grid point, strategy) carrying the mean and
standard deviation of the combining gain over the trials. Per-trial seeds
derive from the master seed, the scenario name, the grid-point coordinates,
and the trial index, so reordering grid points or strategy lists never
changes any draw and equal master seeds reproduce results bit for bit.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import repeat

import numpy as np

from . import __version__
from .beamforming import (GuideModel, beampattern, gain,
                          guide_feedback_phases, weights_feedback_ideal,
                          weights_guided, weights_location, weights_random)
from .channel import (CarrierConfig, LinkBudget, RiceanKModel, k_at_distance,
                      los_gains, ricean_sample)
from .geometry import (DeploymentSpec, LocalizationError, Placement, Position3,
                       apply_localization_error, sample_placement,
                       separation_bound)
from .protocol import ProtocolConfig, run_protocol_round

SCENARIOS = ("separation-sweep", "delta-sweep", "localization", "kfactor",
             "distance-comparison", "beampattern", "protocol-round")

#: Beampattern presets: (n_radios, lx_m, ly_m, dx_m or "auto", fc_hz).
#: "fig10" is accepted as an alias for the experimental N=4 geometry.
BEAMPATTERN_PRESETS = {
    "region-10x1": (11, 10.0, 1.0, "auto", 900e6),
    "region-5x05": (11, 5.0, 0.5, "auto", 900e6),
    "region-1x01": (11, 1.0, 0.1, "auto", 900e6),
    "experimental": (4, 0.55, 0.1, 0.32, 915e6),
}
BEAMPATTERN_ALIASES = {"fig10": "experimental"}

DEFAULT_SEED = 1729


class UnknownConfigKeyError(ValueError):
    """A config file or override used a key outside the schema."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved inputs of one sweep.

    Physical quantities carry their unit in the field name. ``dx_m``
    entries may be the string ``"auto"``, resolved per L_y through the
    separation bound at ``delta_frac`` wavelengths of mismatch tolerance.
    """

    scenario: str
    trials: int = 100
    seed: int = DEFAULT_SEED
    n_radios: int = 11
    fc_hz: float = 900e6
    lx_m: float = 10.0
    ly_m: tuple = (1.0,)
    dx_m: tuple = ("auto",)
    delta_frac: tuple = (0.2,)
    dest_km: float = 10.0
    k_mode: str = "fixed"             # fixed | pure-los | distance-model
    k_db: float = 25.0
    k_grid_db: tuple = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    strategies: tuple = ("guided",)
    delta_p_m: tuple = ()
    compensate_separation: bool = True
    distance_grid_km: tuple = ()
    snr_grid_db: tuple = ()
    angle_step_deg: float = 1.0
    pattern_radius_km: float = 10.0
    presets: tuple = tuple(BEAMPATTERN_PRESETS)

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")

    @property
    def carrier(self) -> CarrierConfig:
        return CarrierConfig(self.fc_hz)


#: Dotted config-file keys -> ScenarioConfig fields (fail-closed: anything
#: else is rejected).
CONFIG_KEYS = {
    "scenario": "scenario",
    "trials": "trials",
    "seed": "seed",
    "n_radios": "n_radios",
    "carrier.fc_hz": "fc_hz",
    "geometry.lx_m": "lx_m",
    "geometry.ly_m": "ly_m",
    "geometry.dx_m": "dx_m",
    "geometry.delta_frac": "delta_frac",
    "geometry.dest_km": "dest_km",
    "channel.k_mode": "k_mode",
    "channel.k_db": "k_db",
    "channel.k_grid_db": "k_grid_db",
    "strategies": "strategies",
    "localization.delta_p_m": "delta_p_m",
    "localization.compensate_separation": "compensate_separation",
    "distance.grid_km": "distance_grid_km",
    "protocol.snr_grid_db": "snr_grid_db",
    "beampattern.angle_step_deg": "angle_step_deg",
    "beampattern.radius_km": "pattern_radius_km",
    "beampattern.presets": "presets",
}

_LIST_FIELDS = {"ly_m", "dx_m", "delta_frac", "k_grid_db", "strategies",
                "delta_p_m", "distance_grid_km", "snr_grid_db", "presets"}
_INT_FIELDS = {"trials", "seed", "n_radios"}
_BOOL_FIELDS = {"compensate_separation"}
_STR_FIELDS = {"scenario", "k_mode"}


def _parse_scalar(text: str, field_name: str):
    text = text.strip()
    if field_name in _BOOL_FIELDS:
        if text.lower() in ("true", "1", "yes"):
            return True
        if text.lower() in ("false", "0", "no"):
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if field_name in _INT_FIELDS:
        return int(text)
    if field_name in _STR_FIELDS:
        return text
    try:
        return float(text)
    except ValueError:
        return text          # e.g. "auto" inside dx_m, preset names


def parse_config_value(key: str, text: str):
    """Parse one config value into its ScenarioConfig field's type."""
    if key not in CONFIG_KEYS:
        raise UnknownConfigKeyError(f"unknown config key: {key}")
    name = CONFIG_KEYS[key]
    if name in _LIST_FIELDS:
        items = [t for t in (p.strip() for p in text.split(",")) if t]
        return name, tuple(_parse_scalar(t, name) for t in items)
    return name, _parse_scalar(text, name)


def config_to_flat(cfg: ScenarioConfig) -> dict:
    """Fully resolved config as dotted key -> printable value."""
    out = {}
    for key, name in CONFIG_KEYS.items():
        value = getattr(cfg, name)
        if isinstance(value, tuple):
            out[key] = ",".join(_fmt(v) for v in value)
        elif isinstance(value, bool):
            out[key] = "true" if value else "false"
        else:
            out[key] = _fmt(value)
    return out


def config_hash(cfg: ScenarioConfig) -> str:
    text = "\n".join(f"{k} = {v}" for k, v in sorted(config_to_flat(cfg).items()))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".10g")
    return str(v)


@dataclass(frozen=True)
class SweepRow:
    scenario: str
    strategy: str
    x1: float
    x2: object          # second coordinate, or "" when the grid is 1D
    mean_gain: float
    std_gain: float
    trials: int
    seed: int


@dataclass
class SweepResult:
    """Rows plus the metadata echoed next to them."""

    config: ScenarioConfig
    rows: list
    extras: dict = field(default_factory=dict)

    def metadata(self) -> dict:
        meta = {"scenario": self.config.scenario,
                "tool_version": __version__,
                "config_hash": config_hash(self.config),
                "rows": str(len(self.rows))}
        for k, v in config_to_flat(self.config).items():
            meta[f"config.{k}"] = v
        meta.update({k: _fmt(v) for k, v in sorted(self.extras.items())})
        return meta

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["scenario", "strategy", "x1", "x2", "mean_gain",
                        "std_gain", "trials", "seed"])
            for r in self.rows:
                w.writerow([r.scenario, r.strategy, _fmt(r.x1), _fmt(r.x2),
                            _fmt(r.mean_gain), _fmt(r.std_gain),
                            r.trials, r.seed])

    def write_jsonlines(self, path):
        with open(path, "w") as fh:
            for r in self.rows:
                fh.write(json.dumps({
                    "scenario": r.scenario, "strategy": r.strategy,
                    "x1": r.x1, "x2": r.x2, "mean_gain": r.mean_gain,
                    "std_gain": r.std_gain, "trials": r.trials,
                    "seed": r.seed}, sort_keys=True) + "\n")

    def write_metadata(self, path):
        with open(path, "w") as fh:
            for k, v in self.metadata().items():
                fh.write(f"{k} = {v}\n")


def derive_seed(master: int, scenario: str, point_key: str,
                trial: int | None = None) -> int:
    """Stable 64-bit seed from the run coordinates.

    Keyed on the grid-point values rather than positions, so reordering a
    grid leaves every draw unchanged.
    """
    tag = f"{master}|{scenario}|{point_key}" + ("" if trial is None
                                                else f"|{trial}")
    return int.from_bytes(hashlib.sha256(tag.encode()).digest()[:8], "little")


def _child_rng(seed: int, *tags) -> np.random.Generator:
    salt = hashlib.sha256("|".join(str(t) for t in tags).encode()).digest()
    return np.random.default_rng([seed, int.from_bytes(salt[:8], "little")])


def _resolve_dx(dx, ly_m: float, delta_frac: float,
                carrier: CarrierConfig) -> float:
    if dx == "auto":
        return separation_bound(ly_m, delta_frac * carrier.wavelength_m)
    return float(dx)


def _destination(cfg: ScenarioConfig) -> Position3:
    return Position3(cfg.dest_km * 1000.0, 0.0, 0.0)


def _trial_k_db(cfg: ScenarioConfig, rng, dist_km: float | None = None,
                model: RiceanKModel | None = None) -> float:
    if cfg.k_mode == "pure-los":
        return math.inf
    if cfg.k_mode == "distance-model":
        return k_at_distance(dist_km if dist_km is not None else cfg.dest_km,
                             model or RiceanKModel(), rng)
    return cfg.k_db


def _dest_channels(placement: Placement, carrier: CarrierConfig,
                   k_db: float, rng):
    h_los = los_gains(placement.positions(),
                      placement.destination.as_array(), carrier.wavelength_m)
    return ricean_sample(h_los, k_db, rng)


def _mean_std(values) -> tuple:
    arr = np.asarray(values, dtype=float)
    return float(arr.mean()), float(arr.std())


# ---------------------------------------------------------------------------
# separation sweep (gain vs guide separation, per vertical spread)

def _separation_point(cfg: ScenarioConfig, point) -> list:
    ly, dx_spec = point
    carrier = cfg.carrier
    dx = _resolve_dx(dx_spec, ly, cfg.delta_frac[0], carrier)
    key = f"ly={_fmt(ly)};dx={_fmt(dx)}"
    spec = DeploymentSpec(cfg.lx_m, ly, dx, cfg.n_radios - 1)
    dest = _destination(cfg)
    gains = []
    for trial in range(cfg.trials):
        rng = np.random.default_rng(derive_seed(cfg.seed, cfg.scenario, key, trial))
        placement = sample_placement(spec, rng, dest)
        k_db = _trial_k_db(cfg, rng)
        channels = _dest_channels(placement, carrier, k_db, rng)
        wv = weights_guided(placement, guide_feedback_phases(placement, carrier),
                            GuideModel(reciprocal=True))
        gains.append(gain(wv, channels))
    mean, std = _mean_std(gains)
    return [SweepRow(cfg.scenario, "guided", dx, ly, mean, std, cfg.trials,
                     derive_seed(cfg.seed, cfg.scenario, key))]


def run_separation_sweep(cfg: ScenarioConfig, jobs: int = 1) -> SweepResult:
    carrier = cfg.carrier
    points = [(ly, dx) for ly in cfg.ly_m for dx in cfg.dx_m]
    rows = _run_points(cfg, points, _separation_point, jobs)
    extras = {f"marker_dx_m.ly_{_fmt(ly)}":
              separation_bound(ly, cfg.delta_frac[0] * carrier.wavelength_m)
              for ly in cfg.ly_m}
    return SweepResult(cfg, rows, extras)


# ---------------------------------------------------------------------------
# delta sweep (required separation and gain vs mismatch tolerance)

def _delta_point(cfg: ScenarioConfig, point) -> list:
    frac, ly = point
    carrier = cfg.carrier
    dx = separation_bound(ly, frac * carrier.wavelength_m)
    key = f"delta={_fmt(frac)};ly={_fmt(ly)}"
    spec = DeploymentSpec(cfg.lx_m, ly, dx, cfg.n_radios - 1)
    dest = _destination(cfg)
    gains = []
    for trial in range(cfg.trials):
        rng = np.random.default_rng(derive_seed(cfg.seed, cfg.scenario, key, trial))
        placement = sample_placement(spec, rng, dest)
        k_db = _trial_k_db(cfg, rng)
        channels = _dest_channels(placement, carrier, k_db, rng)
        wv = weights_guided(placement, guide_feedback_phases(placement, carrier),
                            GuideModel(reciprocal=True))
        gains.append(gain(wv, channels))
    mean, std = _mean_std(gains)
    return [SweepRow(cfg.scenario, "guided", ly, dx, mean, std, cfg.trials,
                     derive_seed(cfg.seed, cfg.scenario, key))]


def run_delta_sweep(cfg: ScenarioConfig, jobs: int = 1) -> SweepResult:
    carrier = cfg.carrier
    points = [(frac, ly) for frac in cfg.delta_frac for ly in cfg.ly_m]
    rows = _run_points(cfg, points, _delta_point, jobs)
    extras = {f"separation_m.delta_{_fmt(f)}.ly_{_fmt(ly)}":
              separation_bound(ly, f * carrier.wavelength_m)
              for f in cfg.delta_frac for ly in cfg.ly_m}
    return SweepResult(cfg, rows, extras)


# ---------------------------------------------------------------------------
# localization study (gain vs position error range)

def _localization_point(cfg: ScenarioConfig, point) -> list:
    (delta_p,) = point
    carrier = cfg.carrier
    ly = cfg.ly_m[0]
    ly_eff = ly + delta_p if cfg.compensate_separation else ly
    dx = separation_bound(ly_eff, cfg.delta_frac[0] * carrier.wavelength_m)
    key = f"dp={_fmt(delta_p)}"
    spec = DeploymentSpec(cfg.lx_m, ly, dx, cfg.n_radios - 1)
    dest = _destination(cfg)
    err = LocalizationError(delta_p)
    sums = {s: [] for s in cfg.strategies}
    for trial in range(cfg.trials):
        rng = np.random.default_rng(derive_seed(cfg.seed, cfg.scenario, key, trial))
        intended = sample_placement(spec, rng, dest)
        actual = apply_localization_error(intended, err, rng)
        # The perfect-guide variant shares every draw except the guide's
        # own landing error.
        actual_pg = Placement(guide=Position3(0.0, 0.0, 0.0),
                              followers=actual.followers,
                              destination=actual.destination)
        k_db = _trial_k_db(cfg, rng)
        for strategy in cfg.strategies:
            place = actual_pg if strategy == "guided-perfect-guide" else actual
            channels = _dest_channels(place, carrier, k_db,
                                      _child_rng(derive_seed(cfg.seed, cfg.scenario,
                                                             key, trial), "ch"))
            if strategy == "location":
                wv = weights_location(intended, carrier, cfg.lx_m)
            else:
                wv = weights_guided(place, guide_feedback_phases(place, carrier),
                                    GuideModel(reciprocal=True))
            sums[strategy].append(gain(wv, channels))
    rows = []
    for strategy in cfg.strategies:
        mean, std = _mean_std(sums[strategy])
        rows.append(SweepRow(cfg.scenario, strategy, delta_p, dx, mean, std,
                             cfg.trials, derive_seed(cfg.seed, cfg.scenario, key)))
    return rows


def run_localization_study(cfg: ScenarioConfig, jobs: int = 1) -> SweepResult:
    points = [(dp,) for dp in cfg.delta_p_m]
    rows = _run_points(cfg, points, _localization_point, jobs)
    carrier = cfg.carrier
    extras = {}
    for dp in cfg.delta_p_m:
        ly_eff = cfg.ly_m[0] + dp if cfg.compensate_separation else cfg.ly_m[0]
        extras[f"dx_used_m.dp_{_fmt(dp)}"] = separation_bound(
            ly_eff, cfg.delta_frac[0] * carrier.wavelength_m)
    return SweepResult(cfg, rows, extras)


# ---------------------------------------------------------------------------
# K-factor study

def _kfactor_point(cfg: ScenarioConfig, point) -> list:
    (k_db,) = point
    carrier = cfg.carrier
    dx = _resolve_dx(cfg.dx_m[0], cfg.ly_m[0], cfg.delta_frac[0], carrier)
    key = f"k={_fmt(k_db)}"
    spec = DeploymentSpec(cfg.lx_m, cfg.ly_m[0], dx, cfg.n_radios - 1)
    dest = _destination(cfg)
    sums = {s: [] for s in cfg.strategies}
    for trial in range(cfg.trials):
        seed = derive_seed(cfg.seed, cfg.scenario, key, trial)
        rng = np.random.default_rng(seed)
        placement = sample_placement(spec, rng, dest)
        channels = _dest_channels(placement, carrier, k_db, rng)
        fb = guide_feedback_phases(placement, carrier)
        for strategy in cfg.strategies:
            if strategy == "feedback-ideal":
                wv = weights_feedback_ideal(channels)
            elif strategy == "guided-nonreciprocal":
                wv = weights_guided(placement, fb, GuideModel(reciprocal=False),
                                    _child_rng(seed, strategy))
            else:
                wv = weights_guided(placement, fb, GuideModel(reciprocal=True))
            sums[strategy].append(gain(wv, channels))
    rows = []
    for strategy in cfg.strategies:
        mean, std = _mean_std(sums[strategy])
        rows.append(SweepRow(cfg.scenario, strategy, k_db, "", mean, std,
                             cfg.trials, derive_seed(cfg.seed, cfg.scenario, key)))
    return rows


def run_kfactor_study(cfg: ScenarioConfig, jobs: int = 1) -> SweepResult:
    points = [(k,) for k in cfg.k_grid_db]
    rows = _run_points(cfg, points, _kfactor_point, jobs)
    return SweepResult(cfg, rows, {})


# ---------------------------------------------------------------------------
# distance comparison (signal-level protocol in the loop)

def _distance_point(cfg: ScenarioConfig, point) -> list:
    (dist_km,) = point
    carrier = cfg.carrier
    dx = _resolve_dx(cfg.dx_m[0], cfg.ly_m[0], cfg.delta_frac[0], carrier)
    key = f"d={_fmt(dist_km)}"
    spec = DeploymentSpec(cfg.lx_m, cfg.ly_m[0], dx, cfg.n_radios - 1)
    dest = Position3(dist_km * 1000.0, 0.0, 0.0)
    budget = LinkBudget()
    pcfg = ProtocolConfig()
    model = RiceanKModel()
    sums = {s: [] for s in cfg.strategies}
    for trial in range(cfg.trials):
        seed = derive_seed(cfg.seed, cfg.scenario, key, trial)
        rng = np.random.default_rng(seed)
        placement = sample_placement(spec, rng, dest)
        k_db = k_at_distance(dist_km, model, rng)    # one shadowing draw per trial
        for strategy in cfg.strategies:
            srng = _child_rng(seed, strategy)
            if strategy == "guided":
                # Feedback at the guide, meters away; the guide transmit
                # chain is taken non-reciprocal for this comparison.
                result = run_protocol_round(
                    placement, "guide", carrier=carrier, budget=budget,
                    cfg=pcfg, guide_model=GuideModel(reciprocal=False),
                    rng=srng)
                channels = _dest_channels(placement, carrier, k_db,
                                          _child_rng(seed, strategy, "ch"))
                sums[strategy].append(gain(result.weights, channels))
            elif strategy == "feedback":
                result = run_protocol_round(
                    placement, "destination", carrier=carrier, budget=budget,
                    cfg=pcfg, link_k_db=k_db, rng=srng)
                sums[strategy].append(result.gamma_feedback)
            elif strategy == "random":
                channels = _dest_channels(placement, carrier, k_db,
                                          _child_rng(seed, strategy, "ch"))
                wv = weights_random(cfg.n_radios, srng)
                sums[strategy].append(gain(wv, channels))
            else:
                raise ValueError(f"unknown strategy {strategy!r}")
    rows = []
    for strategy in cfg.strategies:
        mean, std = _mean_std(sums[strategy])
        rows.append(SweepRow(cfg.scenario, strategy, dist_km, "", mean, std,
                             cfg.trials, derive_seed(cfg.seed, cfg.scenario, key)))
    return rows


def run_distance_comparison(cfg: ScenarioConfig, jobs: int = 1) -> SweepResult:
    points = [(d,) for d in cfg.distance_grid_km]
    rows = _run_points(cfg, points, _distance_point, jobs)
    return SweepResult(cfg, rows, {})


# ---------------------------------------------------------------------------
# beampattern study

def _beampattern_point(cfg: ScenarioConfig, point) -> list:
    (preset_name,) = point
    name = BEAMPATTERN_ALIASES.get(preset_name, preset_name)
    if name not in BEAMPATTERN_PRESETS:
        raise ValueError(f"unknown beampattern preset {preset_name!r}")
    n, lx, ly, dx_spec, fc = BEAMPATTERN_PRESETS[name]
    carrier = CarrierConfig(fc)
    dx = _resolve_dx(dx_spec, ly, cfg.delta_frac[0], carrier)
    key = f"preset={name}"
    spec = DeploymentSpec(lx, ly, dx, n - 1)
    step = cfg.angle_step_deg
    angles_deg = np.arange(-180.0, 180.0 + step / 2.0, step)
    radius = cfg.pattern_radius_km * 1000.0
    samples = np.empty((cfg.trials, len(angles_deg)))
    for trial in range(cfg.trials):
        rng = np.random.default_rng(derive_seed(cfg.seed, cfg.scenario, key, trial))
        placement = sample_placement(spec, rng)
        wv = weights_guided(placement, guide_feedback_phases(placement, carrier),
                            GuideModel(reciprocal=True))
        pat = beampattern(placement, wv, carrier, radius,
                          np.deg2rad(angles_deg))
        samples[trial] = pat.gains
    base_seed = derive_seed(cfg.seed, cfg.scenario, key)
    return [SweepRow(cfg.scenario, name, float(a), "",
                     float(samples[:, i].mean()), float(samples[:, i].std()),
                     cfg.trials, base_seed)
            for i, a in enumerate(angles_deg)]


def run_beampattern_study(cfg: ScenarioConfig, jobs: int = 1) -> SweepResult:
    points = [(p,) for p in cfg.presets]
    rows = _run_points(cfg, points, _beampattern_point, jobs)
    return SweepResult(cfg, rows, {})


# ---------------------------------------------------------------------------
# protocol round sweep (gain at the feedback radio vs link SNR)

def _protocol_point(cfg: ScenarioConfig, point) -> list:
    (snr_db,) = point
    carrier = cfg.carrier
    dx = _resolve_dx(cfg.dx_m[0], cfg.ly_m[0], cfg.delta_frac[0], carrier)
    key = f"snr={_fmt(snr_db)}"
    spec = DeploymentSpec(cfg.lx_m, cfg.ly_m[0], dx, cfg.n_radios - 1)
    gains = []
    for trial in range(cfg.trials):
        rng = np.random.default_rng(derive_seed(cfg.seed, cfg.scenario, key, trial))
        placement = sample_placement(spec, rng)
        result = run_protocol_round(placement, "guide", carrier=carrier,
                                    snr_override_db=snr_db, rng=rng)
        gains.append(result.gamma_feedback)
    mean, std = _mean_std(gains)
    return [SweepRow(cfg.scenario, "protocol", snr_db, "", mean, std,
                     cfg.trials, derive_seed(cfg.seed, cfg.scenario, key))]


def run_protocol_sweep(cfg: ScenarioConfig, jobs: int = 1) -> SweepResult:
    points = [(s,) for s in cfg.snr_grid_db]
    rows = _run_points(cfg, points, _protocol_point, jobs)
    return SweepResult(cfg, rows, {})


# ---------------------------------------------------------------------------

_POINT_FNS = {
    "separation-sweep": _separation_point,
    "delta-sweep": _delta_point,
    "localization": _localization_point,
    "kfactor": _kfactor_point,
    "distance-comparison": _distance_point,
    "beampattern": _beampattern_point,
    "protocol-round": _protocol_point,
}

_RUNNERS = {
    "separation-sweep": run_separation_sweep,
    "delta-sweep": run_delta_sweep,
    "localization": run_localization_study,
    "kfactor": run_kfactor_study,
    "distance-comparison": run_distance_comparison,
    "beampattern": run_beampattern_study,
    "protocol-round": run_protocol_sweep,
}


def _run_points(cfg: ScenarioConfig, points, point_fn, jobs: int) -> list:
    """Evaluate grid points, possibly in parallel, reducing in grid order."""
    if not points:
        raise ValueError(f"{cfg.scenario}: empty parameter grid")
    if jobs <= 1 or len(points) <= 1:
        chunks = [point_fn(cfg, pt) for pt in points]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(point_fn, repeat(cfg), points, chunksize=1))
    return [row for chunk in chunks for row in chunk]


def preset_config(scenario: str, **overrides) -> ScenarioConfig:
    """Default configuration reproducing the published study per scenario."""
    base = {
        "separation-sweep": dict(
            ly_m=(0.0, 1.0, 2.0, 4.0, 8.0),
            dx_m=(0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, "auto"),
        ),
        "delta-sweep": dict(
            delta_frac=(0.05, 0.1, 0.2, 0.3, 0.4),
            ly_m=(0.5, 1.0, 2.0, 4.0, 8.0),
        ),
        "localization": dict(
            k_mode="pure-los",
            strategies=("guided", "guided-perfect-guide", "location"),
            delta_p_m=(0.0, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0, 1.5, 2.0),
        ),
        "kfactor": dict(
            strategies=("guided", "guided-nonreciprocal", "feedback-ideal"),
        ),
        "distance-comparison": dict(
            k_mode="distance-model",
            strategies=("guided", "feedback", "random"),
            distance_grid_km=(1.0, 2.0, 3.0, 4.0, 6.0, 10.0, 16.0, 25.0),
        ),
        "beampattern": dict(
            k_mode="pure-los",
        ),
        "protocol-round": dict(
            n_radios=4,
            snr_grid_db=(10.0, 15.0, 20.0, 25.0, 30.0, 40.0),
        ),
    }[scenario]
    base.update(overrides)
    return ScenarioConfig(scenario=scenario, **base)


def run_scenario(cfg: ScenarioConfig, jobs: int = 1) -> SweepResult:
    return _RUNNERS[cfg.scenario](cfg, jobs=jobs)
