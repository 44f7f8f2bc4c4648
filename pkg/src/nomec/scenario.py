"""Scenario configuration, topology generation, and channel realization.

Topology: UDs uniform over a hexagonal cell, APs on a ring at half the cell
radius, MEC servers on a small ring near the centre. Uplink path loss
128.1 + 37.6 log10(d_km) dB, backhaul 148 + 40 log10(d_km) dB, log-normal
shadowing per link per scenario, unit-mean Rayleigh fading per trial.
"""

import dataclasses
import json
import math
from dataclasses import dataclass

import numpy as np

from .model import (AccessPoint, ChannelState, CostWeights, MecServer, Task,
                    UserDevice)


class ConfigError(ValueError):
    """Raised for unparseable, unknown, or out-of-range configuration."""


@dataclass(frozen=True)
class ScenarioConfig:
    n_uds: int = 24
    n_aps: int = 9
    n_mecs: int = 4
    rrbs_per_ap: int = 3
    cell_radius_m: float = 1500.0
    ap_coverage_m: float = 750.0
    task_size_range_bits: tuple = (400.0, 600.0)
    density_cpb: float = 100.0
    deadline_s: float = 0.01
    f_mec_cps: float = 3e9
    f_loc_max_cps: float = 5e7
    alpha_cpu: float = 1e-27
    rate_threshold_bps: float = 5e4
    rrb_bandwidth_hz: float = 1e7
    noise_dbm_hz: float = -174.0
    p_max_dbm_hz: float = -42.60
    shadowing_std_db: float = 4.0
    w_latency: float = 0.5
    w_energy: float = 0.5
    q_idle_factor: float = 0.1
    backhaul_bandwidth_scaling: bool = True
    ap_positions: tuple = None
    mec_positions: tuple = None
    seed: int = 0

    def __post_init__(self):
        for name in ("n_uds", "n_aps", "n_mecs", "rrbs_per_ap"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        for name in ("cell_radius_m", "ap_coverage_m", "density_cpb", "deadline_s",
                     "f_mec_cps", "f_loc_max_cps", "rrb_bandwidth_hz"):
            v = getattr(self, name)
            if not v > 0:
                raise ConfigError(f"{name} must be positive, got {v!r}")
        for name in ("alpha_cpu", "rate_threshold_bps", "shadowing_std_db",
                     "w_latency", "w_energy", "q_idle_factor"):
            v = getattr(self, name)
            if v < 0:
                raise ConfigError(f"{name} must be >= 0, got {v!r}")
        lo, hi = self.task_size_range_bits
        if not (0 < lo <= hi):
            raise ConfigError(f"task_size_range_bits must satisfy 0 < lo <= hi, got {self.task_size_range_bits!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")


_CONFIG_FIELDS = {f.name for f in dataclasses.fields(ScenarioConfig)}


def load_config(text: str) -> ScenarioConfig:
    """Parse a flat JSON object into a ScenarioConfig.

    Unknown keys are rejected by name; an empty document yields defaults.
    """
    try:
        raw = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config document must be a JSON object")
    unknown = sorted(set(raw) - _CONFIG_FIELDS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    kwargs = {}
    for key, value in raw.items():
        if key == "task_size_range_bits":
            if not (isinstance(value, (list, tuple)) and len(value) == 2):
                raise ConfigError("task_size_range_bits must be a [lo, hi] pair")
            value = (float(value[0]), float(value[1]))
        elif key in ("ap_positions", "mec_positions") and value is not None:
            value = tuple((float(p[0]), float(p[1])) for p in value)
        kwargs[key] = value
    try:
        return ScenarioConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad config value: {exc}") from exc


def dbm_per_hz_to_watts(dbm_hz: float, bandwidth_hz: float) -> float:
    """Integrate a dBm/Hz density over a bandwidth, in watts."""
    return 10.0 ** (dbm_hz / 10.0) * 1e-3 * bandwidth_hz


def pathloss_uplink_db(distance_m: float) -> float:
    """UD to AP path loss, dB."""
    return 128.1 + 37.6 * math.log10(max(distance_m, 1.0) / 1000.0)


def pathloss_backhaul_db(distance_m: float) -> float:
    """AP to MEC path loss, dB."""
    return 148.0 + 40.0 * math.log10(max(distance_m, 1.0) / 1000.0)


@dataclass(frozen=True)
class Scenario:
    """Immutable problem instance: devices, infrastructure, one channel
    realization, and the coverage relation."""
    devices: tuple
    aps: tuple
    mecs: tuple
    channel: ChannelState
    coverage: dict          # ap_id -> frozenset of ud ids
    weights: CostWeights
    config: ScenarioConfig
    seed: int
    unservable: frozenset   # ud ids no AP covers
    mean_gain_uplink: dict      # (ud, ap) -> path loss * shadowing
    mean_gain_backhaul: dict    # (ap, mec) -> path loss * shadowing

    @property
    def backhaul_bandwidth_scaling(self) -> bool:
        return self.config.backhaul_bandwidth_scaling

    def device_by_id(self, ud_id: int) -> UserDevice:
        return self.devices[ud_id]

    def candidate_aps(self, ud_id: int):
        return tuple(ap.id for ap in self.aps if ud_id in self.coverage[ap.id])


def _in_hexagon(x: float, y: float, radius: float) -> bool:
    # regular hexagon, circumradius `radius`, one vertex on the +x axis
    s3 = math.sqrt(3.0)
    return abs(y) <= s3 / 2.0 * radius and s3 * abs(x) + abs(y) <= s3 * radius


def _sample_hex_point(rng, radius: float):
    s3 = math.sqrt(3.0)
    while True:
        x = rng.uniform(-radius, radius)
        y = rng.uniform(-s3 / 2.0 * radius, s3 / 2.0 * radius)
        if _in_hexagon(x, y, radius):
            return x, y


def _ring_positions(count: int, radius: float):
    pts = []
    for i in range(count):
        theta = 2.0 * math.pi * i / count
        pts.append((radius * math.cos(theta), radius * math.sin(theta)))
    return tuple(pts)


def _fading_gains(scn_seed: int, trial_seed: int, uplink_keys, backhaul_keys):
    """Unit-mean Rayleigh power fading per link, deterministic per
    (scenario seed, trial seed). Keys must arrive in a canonical order."""
    rng = np.random.default_rng(np.random.SeedSequence([scn_seed, trial_seed]))
    n_up = len(uplink_keys)
    n_bh = len(backhaul_keys)
    re_im = rng.standard_normal((n_up + n_bh, 2))
    power = (re_im[:, 0] ** 2 + re_im[:, 1] ** 2) / 2.0
    up = {k: power[i] for i, k in enumerate(uplink_keys)}
    bh = {k: power[n_up + i] for i, k in enumerate(backhaul_keys)}
    return up, bh


def _uplink_keys(n_uds: int, n_aps: int, n_rrbs: int):
    return [(n, m, z) for n in range(n_uds) for m in range(n_aps) for z in range(n_rrbs)]


def _backhaul_keys(n_aps: int, n_mecs: int):
    return [(m, k) for m in range(n_aps) for k in range(n_mecs)]


def generate(config: ScenarioConfig) -> Scenario:
    """Build a scenario from a config; bit-identical for identical configs."""
    ss = np.random.SeedSequence(config.seed)
    pos_rng, shadow_rng = [np.random.default_rng(s) for s in ss.spawn(2)]

    ap_positions = config.ap_positions or _ring_positions(config.n_aps, 0.5 * config.cell_radius_m)
    if len(ap_positions) != config.n_aps:
        raise ConfigError("ap_positions length must equal n_aps")
    mec_positions = config.mec_positions or _ring_positions(config.n_mecs, 0.1 * config.cell_radius_m)
    if len(mec_positions) != config.n_mecs:
        raise ConfigError("mec_positions length must equal n_mecs")

    p_max_w = dbm_per_hz_to_watts(config.p_max_dbm_hz, config.rrb_bandwidth_hz)
    noise_w = dbm_per_hz_to_watts(config.noise_dbm_hz, config.rrb_bandwidth_hz)

    aps = tuple(
        AccessPoint(id=m, position=ap_positions[m], num_rrbs=config.rrbs_per_ap,
                    f_loc_max_cps=config.f_loc_max_cps, q_tx_w=p_max_w,
                    q_idle_w=config.q_idle_factor * p_max_w,
                    coverage_radius_m=config.ap_coverage_m)
        for m in range(config.n_aps))
    mecs = tuple(
        MecServer(id=k, position=mec_positions[k], f_mec_cps=config.f_mec_cps)
        for k in range(config.n_mecs))

    # UD placement with rejection until covered by at least one AP
    devices = []
    unservable = set()
    lo, hi = config.task_size_range_bits
    for n in range(config.n_uds):
        pos = None
        for _ in range(100):
            cand = _sample_hex_point(pos_rng, config.cell_radius_m)
            if any(math.dist(cand, ap.position) <= config.ap_coverage_m for ap in aps):
                pos = cand
                break
        if pos is None:
            pos = cand
            unservable.add(n)
        size = pos_rng.uniform(lo, hi)
        devices.append(UserDevice(id=n, position=pos, p_max_w=p_max_w,
                                  task=Task(size, config.density_cpb, config.deadline_s)))
    devices = tuple(devices)

    coverage = {
        ap.id: frozenset(d.id for d in devices
                         if math.dist(d.position, ap.position) <= ap.coverage_radius_m)
        for ap in aps}

    # mean link gains: path loss times shadowing, fixed for the scenario
    mean_up = {}
    for d in devices:
        for ap in aps:
            pl = pathloss_uplink_db(math.dist(d.position, ap.position))
            shadow = shadow_rng.normal(0.0, config.shadowing_std_db)
            mean_up[(d.id, ap.id)] = 10.0 ** ((-pl + shadow) / 10.0)
    mean_bh = {}
    for ap in aps:
        for mec in mecs:
            pl = pathloss_backhaul_db(math.dist(ap.position, mec.position))
            shadow = shadow_rng.normal(0.0, config.shadowing_std_db)
            mean_bh[(ap.id, mec.id)] = 10.0 ** ((-pl + shadow) / 10.0)

    up_keys = _uplink_keys(config.n_uds, config.n_aps, config.rrbs_per_ap)
    bh_keys = _backhaul_keys(config.n_aps, config.n_mecs)
    fade_up, fade_bh = _fading_gains(config.seed, 0, up_keys, bh_keys)
    gain_ud_rrb = {(n, m, z): mean_up[(n, m)] * fade_up[(n, m, z)] for (n, m, z) in up_keys}
    gain_ap_mec = {(m, k): mean_bh[(m, k)] * fade_bh[(m, k)] for (m, k) in bh_keys}

    channel = ChannelState(gain_ud_rrb=gain_ud_rrb, gain_ap_mec=gain_ap_mec,
                           noise_w=noise_w, rrb_bandwidth_hz=config.rrb_bandwidth_hz)
    weights = CostWeights(w_latency=config.w_latency, w_energy=config.w_energy,
                          alpha_cpu=config.alpha_cpu,
                          rate_threshold_bps=config.rate_threshold_bps)
    return Scenario(devices=devices, aps=aps, mecs=mecs, channel=channel,
                    coverage=coverage, weights=weights, config=config,
                    seed=config.seed, unservable=frozenset(unservable),
                    mean_gain_uplink=mean_up, mean_gain_backhaul=mean_bh)


def realize_channels(scenario: Scenario, trial_seed: int) -> ChannelState:
    """Redraw fading on every link, keeping path loss and shadowing fixed.

    Deterministic per (scenario seed, trial_seed); trial_seed 0 reproduces
    the realization embedded by generate().
    """
    cfg = scenario.config
    up_keys = _uplink_keys(cfg.n_uds, cfg.n_aps, cfg.rrbs_per_ap)
    bh_keys = _backhaul_keys(cfg.n_aps, cfg.n_mecs)
    fade_up, fade_bh = _fading_gains(scenario.seed, trial_seed, up_keys, bh_keys)
    gain_ud_rrb = {(n, m, z): scenario.mean_gain_uplink[(n, m)] * fade_up[(n, m, z)]
                   for (n, m, z) in up_keys}
    gain_ap_mec = {(m, k): scenario.mean_gain_backhaul[(m, k)] * fade_bh[(m, k)]
                   for (m, k) in bh_keys}
    return ChannelState(gain_ud_rrb=gain_ud_rrb, gain_ap_mec=gain_ap_mec,
                        noise_w=scenario.channel.noise_w,
                        rrb_bandwidth_hz=scenario.channel.rrb_bandwidth_hz)


def with_channel(scenario: Scenario, channel: ChannelState) -> Scenario:
    """A copy of the scenario using a different channel realization."""
    return dataclasses.replace(scenario, channel=channel)
