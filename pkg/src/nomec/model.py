"""Core system model: entities, link rates, and per-group cost formulas.

Units are SI throughout: bits, cycles, seconds, watts, Hz. Channel gains are
linear power gains (dimensionless), noise is total watts over one RRB.
"""

import math
from dataclasses import dataclass, field


class InvalidAssignmentError(ValueError):
    """A UD/RRB reference that the schedule or channel does not know about."""


class InvalidTopologyError(ValueError):
    """A link (UD-AP or AP-MEC) is missing from the channel state."""


class InfeasibleUploadError(ValueError):
    """An upload rate of zero or less where a positive rate is required."""


@dataclass(frozen=True)
class Task:
    """One computation task: size_bits to upload, density cycles per bit,
    deadline_s wall-clock completion budget."""
    size_bits: float
    density_cpb: float
    deadline_s: float

    def __post_init__(self):
        if self.size_bits <= 0 or self.density_cpb <= 0 or self.deadline_s <= 0:
            raise ValueError("task fields must be positive")

    @property
    def cycles(self) -> float:
        return self.size_bits * self.density_cpb


@dataclass(frozen=True)
class UserDevice:
    id: int
    position: tuple
    p_max_w: float
    task: Task

    def __post_init__(self):
        if self.p_max_w <= 0:
            raise ValueError("p_max_w must be positive")


@dataclass(frozen=True)
class AccessPoint:
    id: int
    position: tuple
    num_rrbs: int
    f_loc_max_cps: float
    q_tx_w: float          # backhaul transmit power
    q_idle_w: float        # power drawn while waiting on MEC results
    coverage_radius_m: float

    def __post_init__(self):
        if self.num_rrbs < 1:
            raise ValueError("num_rrbs must be >= 1")
        if min(self.f_loc_max_cps, self.q_tx_w, self.coverage_radius_m) <= 0:
            raise ValueError("AP physical fields must be positive")
        if self.q_idle_w < 0:
            raise ValueError("q_idle_w must be >= 0")


@dataclass(frozen=True)
class MecServer:
    id: int
    position: tuple
    f_mec_cps: float

    def __post_init__(self):
        if self.f_mec_cps <= 0:
            raise ValueError("f_mec_cps must be positive")


@dataclass(frozen=True)
class CostWeights:
    w_latency: float = 0.5
    w_energy: float = 0.5
    alpha_cpu: float = 1e-27       # effective switched capacitance
    rate_threshold_bps: float = 5e4

    def __post_init__(self):
        if self.w_latency < 0 or self.w_energy < 0:
            raise ValueError("objective weights must be >= 0")
        if self.alpha_cpu < 0 or self.rate_threshold_bps < 0:
            raise ValueError("alpha_cpu and rate_threshold_bps must be >= 0")


@dataclass(frozen=True)
class ChannelState:
    """One realization of all link gains.

    gain_ud_rrb maps (ud_id, ap_id, rrb) to a linear uplink power gain,
    gain_ap_mec maps (ap_id, mec_id) likewise for the backhaul hop.
    noise_w is the receiver noise over one RRB of rrb_bandwidth_hz.
    """
    gain_ud_rrb: dict
    gain_ap_mec: dict
    noise_w: float
    rrb_bandwidth_hz: float

    def __post_init__(self):
        if self.noise_w <= 0 or self.rrb_bandwidth_hz <= 0:
            raise ValueError("noise_w and rrb_bandwidth_hz must be positive")


@dataclass(frozen=True)
class Metrics:
    latency_s: float
    energy_j: float
    cost: float
    effective_capacity: int
    scheduled_uds: int


@dataclass(frozen=True)
class RrbAssignment:
    """The co-scheduled members of one RRB at one AP.

    members is a tuple of (ud_id, power_w) pairs; decoding follows
    descending channel gain with ties broken by ascending ud id.
    """
    ap: int
    rrb: int
    members: tuple


def sinr(slice_: RrbAssignment, ud_id: int, channel: ChannelState) -> float:
    """SINR of ud_id inside one NOMA cluster under SIC.

    A member is decoded before every member with a strictly smaller gain
    (ties: the smaller id decodes first), so it sees only the later ones
    as interference. The last-decoded member gets an interference-free SNR.
    """
    powers = dict(slice_.members)
    if ud_id not in powers:
        raise InvalidAssignmentError(f"ud {ud_id} not scheduled on rrb {slice_.rrb} of ap {slice_.ap}")

    def gain_of(n):
        key = (n, slice_.ap, slice_.rrb)
        if key not in channel.gain_ud_rrb:
            raise InvalidTopologyError(f"no uplink gain for ud {n} on ap {slice_.ap} rrb {slice_.rrb}")
        return channel.gain_ud_rrb[key]

    g = gain_of(ud_id)
    interference = 0.0
    for n, p in slice_.members:
        if n == ud_id:
            continue
        gn = gain_of(n)
        # decoded after ud_id <=> weaker gain, or equal gain with larger id
        if gn < g or (gn == g and n > ud_id):
            interference += p * gn
    return powers[ud_id] * g / (interference + channel.noise_w)


def uplink_rate(sinr_value: float, channel: ChannelState) -> float:
    """Shannon rate over one RRB, bits/s."""
    if sinr_value < 0:
        raise ValueError("sinr must be >= 0")
    return channel.rrb_bandwidth_hz * math.log2(1.0 + sinr_value)


def backhaul_rate(ap: AccessPoint, mec: MecServer, channel: ChannelState,
                  bandwidth_scaled: bool = True) -> float:
    """AP to MEC transfer rate.

    bandwidth_scaled=True returns bits/s (spectral efficiency times the RRB
    bandwidth); False returns the bare log2 term.
    """
    key = (ap.id, mec.id)
    if key not in channel.gain_ap_mec:
        raise InvalidTopologyError(f"no backhaul gain for ap {ap.id} -> mec {mec.id}")
    se = math.log2(1.0 + ap.q_tx_w * channel.gain_ap_mec[key] / channel.noise_w)
    return channel.rrb_bandwidth_hz * se if bandwidth_scaled else se


def local_cost(group, f_loc: float, weights: CostWeights):
    """(delay_s, energy_j) for processing a collected group at the AP.

    group is a sequence of (Task, upload_rate_bps). Delay is the slowest
    upload plus the serial compute time of all cycles at f_loc; energy is
    the CPU energy alpha * cycles * f_loc^2.
    """
    if not group:
        return 0.0, 0.0
    if f_loc <= 0:
        raise ValueError("f_loc must be positive for a nonempty group")
    upload = 0.0
    cycles = 0.0
    for task, rate in group:
        if rate <= 0:
            raise InfeasibleUploadError("upload rate must be positive")
        upload = max(upload, task.size_bits / rate)
        cycles += task.cycles
    delay = upload + cycles / f_loc
    energy = weights.alpha_cpu * cycles * f_loc ** 2
    return delay, energy


def mec_cost(group, ap: AccessPoint, mec: MecServer, channel: ChannelState,
             weights: CostWeights, bandwidth_scaled: bool = True):
    """(delay_s, energy_j) for offloading a collected group over the backhaul.

    Delay: slowest upload + forwarding all bits at the backhaul rate + MEC
    compute. Energy: AP transmit energy during forwarding plus idle draw
    while the MEC computes.
    """
    if not group:
        return 0.0, 0.0
    rate_bh = backhaul_rate(ap, mec, channel, bandwidth_scaled)
    if rate_bh <= 0:
        raise InvalidTopologyError(f"backhaul ap {ap.id} -> mec {mec.id} has zero rate")
    upload = 0.0
    bits = 0.0
    cycles = 0.0
    for task, rate in group:
        if rate <= 0:
            raise InfeasibleUploadError("upload rate must be positive")
        upload = max(upload, task.size_bits / rate)
        bits += task.size_bits
        cycles += task.cycles
    t_fwd = bits / rate_bh
    t_cpu = cycles / mec.f_mec_cps
    delay = upload + t_fwd + t_cpu
    energy = t_fwd * ap.q_tx_w + t_cpu * ap.q_idle_w
    return delay, energy


def _group_demand_cps(tasks, n_tasks: int) -> float:
    """Per-AP CPU demand: total cycles over the group's pooled deadline
    budget n_tasks * min(deadline)."""
    cycles = sum(t.cycles for t in tasks)
    deadline = min(t.deadline_s for t in tasks)
    return cycles / (n_tasks * deadline)


def system_metrics(schedule, plan, scenario) -> Metrics:
    """Evaluate a schedule plus offload plan.

    Per AP with a nonempty group the cost is (1-x)*local + x*y*MEC; groups
    in plan.failed_aps are dropped from both the latency max and the energy
    sum and surface only as lost capacity. Effective capacity counts the
    scheduled UDs whose group was processed within its deadline rule:
    locally feasible allocation for local groups, wall-clock completion
    within the tightest member deadline for MEC and fallback groups.
    """
    w = scenario.weights
    latency = 0.0
    energy = 0.0
    capacity = 0
    scheduled = 0
    bh_scaled = scenario.backhaul_bandwidth_scaling
    mec_by_id = {m.id: m for m in scenario.mecs}
    ap_by_id = {a.id: a for a in scenario.aps}
    for ap_id, entries in schedule.ap_groups.items():
        if not entries:
            continue
        scheduled += len(entries)
        if ap_id in plan.failed_aps:
            continue
        ap = ap_by_id[ap_id]
        group = [(task, rate) for _, task, rate in entries]
        tasks = [task for _, task, _ in entries]
        deadline = min(t.deadline_s for t in tasks)
        if ap_id not in plan.local.f_loc:
            raise InvalidAssignmentError(f"plan does not cover ap {ap_id}")
        offload = plan.local.x.get(ap_id, False)
        if not offload:
            d, e = local_cost(group, plan.local.f_loc[ap_id], w)
            demand = _group_demand_cps(tasks, len(tasks))
            ok = demand <= ap.f_loc_max_cps * (1.0 + 1e-9)
        elif plan.admission.y.get(ap_id, False):
            mec = mec_by_id[plan.admission.assignment[ap_id]]
            d, e = mec_cost(group, ap, mec, scenario.channel, w, bh_scaled)
            ok = d <= deadline
        elif ap_id in plan.fallback_aps:
            # best-effort local at the cap; deadline misses count as failures
            d, e = local_cost(group, ap.f_loc_max_cps, w)
            ok = d <= deadline
        else:
            raise InvalidAssignmentError(
                f"ap {ap_id} flagged for offload but neither admitted, fallback, nor failed")
        latency = max(latency, d)
        energy += e
        if ok:
            capacity += len(entries)
    cost = w.w_latency * latency + w.w_energy * energy
    return Metrics(latency, energy, cost, capacity, scheduled)
