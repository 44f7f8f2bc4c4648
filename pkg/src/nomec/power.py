"""Per-cluster NOMA transmit power allocation.

For a 1- or 2-UD cluster on one RRB the solver maximizes the SIC sum rate
subject to per-UD power caps and a per-UD rate floor. The uplink sum rate
log2((p_s*g_s + p_w*g_w + noise)/noise) is increasing in both powers, so the
optimum sits at p_strong = p_max with p_weak at p_max or on the rate-floor
boundary of the strong UD. A brute-force grid oracle is kept alongside for
verification and never shares code with the solver.
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PowerConstraints:
    p_max_w: float
    rate_threshold_bps: float = 0.0

    def __post_init__(self):
        if self.p_max_w <= 0:
            raise ValueError("p_max_w must be positive")
        if self.rate_threshold_bps < 0:
            raise ValueError("rate_threshold_bps must be >= 0")


@dataclass(frozen=True)
class ClusterPowerSolution:
    """powers/rates follow the candidate's member order. objective is the
    sum of log2(1+sinr) terms (bandwidth-free); infeasible solutions carry
    zero powers and -inf objective."""
    powers: tuple
    rates: tuple
    objective: float
    feasible: bool


def _sic_order(members):
    """Decoding order: descending gain, ties by ascending ud id."""
    return sorted(range(len(members)), key=lambda i: (-members[i][1], members[i][0]))


def _evaluate(members, powers, noise_w, bandwidth_hz):
    """Per-member (sinr, rate) under SIC for given powers."""
    order = _sic_order(members)
    out = [None] * len(members)
    for pos, i in enumerate(order):
        interference = sum(powers[j] * members[j][1] for j in order[pos + 1:])
        s = powers[i] * members[i][1] / (interference + noise_w)
        out[i] = (s, bandwidth_hz * math.log2(1.0 + s))
    return out


def solve_cluster_power(members, channel, constraints: PowerConstraints,
                        objective: str = "sum") -> ClusterPowerSolution:
    """Optimal powers for one cluster.

    members: sequence of (ud_id, linear_gain), length 1 or 2.
    objective "sum" maximizes the sum rate; "min" maximizes the worst
    per-UD rate. Both explore the closed-form candidate points.
    """
    if len(members) not in (1, 2):
        raise ValueError("clusters hold 1 or 2 UDs")
    if objective not in ("sum", "min"):
        raise ValueError(f"unknown objective {objective!r}")
    p_max = constraints.p_max_w
    noise = channel.noise_w
    b0 = channel.rrb_bandwidth_hz
    r_th = constraints.rate_threshold_bps

    def package(powers):
        ev = _evaluate(members, powers, noise, b0)
        rates = tuple(r for _, r in ev)
        # floor enforced to 1e-12 relative so the analytic boundary point
        # survives float round-trip
        if any(r < r_th * (1.0 - 1e-12) for r in rates):
            return None
        obj = sum(math.log2(1.0 + s) for s, _ in ev)
        if objective == "min":
            obj = min(math.log2(1.0 + s) for s, _ in ev)
        return ClusterPowerSolution(tuple(powers), rates, obj, True)

    infeasible = ClusterPowerSolution((0.0,) * len(members), (0.0,) * len(members),
                                      float("-inf"), False)
    if len(members) == 1:
        sol = package([p_max])
        return sol if sol is not None else infeasible

    order = _sic_order(members)
    strong, weak = order[0], order[1]
    g_s = members[strong][1]
    g_w = members[weak][1]
    gamma_th = 2.0 ** (r_th / b0) - 1.0

    candidates = [[p_max, p_max]]
    if gamma_th > 0.0 and g_w > 0.0:
        # strong UD's floor binds: p_w where sinr_strong == gamma_th
        p_w_hi = (p_max * g_s / gamma_th - noise) / g_w
        if 0.0 <= p_w_hi <= p_max:
            pw = [0.0, 0.0]
            pw[strong] = p_max
            pw[weak] = p_w_hi
            candidates.append(pw)
    if objective == "min" and g_w > 0.0:
        # rate-balancing point: sinr_strong == sinr_weak at p_strong = p_max
        u = (-noise + math.sqrt(noise ** 2 + 4.0 * p_max * g_s * noise)) / 2.0
        p_bal = u / g_w
        if 0.0 <= p_bal <= p_max:
            pb = [0.0, 0.0]
            pb[strong] = p_max
            pb[weak] = p_bal
            candidates.append(pb)

    best = infeasible
    for cand in candidates:
        sol = package(cand)
        if sol is not None and sol.objective > best.objective:
            best = sol
    return best


def grid_oracle(members, channel, constraints: PowerConstraints,
                resolution: int = 512, objective: str = "sum") -> ClusterPowerSolution:
    """Exhaustive search over a uniform power grid including 0 and p_max.

    Independent of the closed-form solver by construction; resolution is the
    number of points per axis (resolution=2 evaluates only the corners).
    """
    if len(members) not in (1, 2):
        raise ValueError("clusters hold 1 or 2 UDs")
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    p_max = constraints.p_max_w
    noise = channel.noise_w
    b0 = channel.rrb_bandwidth_hz
    r_th = constraints.rate_threshold_bps
    axis = np.linspace(0.0, p_max, resolution)

    if len(members) == 1:
        g = members[0][1]
        snr = axis * g / noise
        rates = b0 * np.log2(1.0 + snr)
        obj = np.log2(1.0 + snr)
        feas = rates >= r_th
        if not feas.any():
            return ClusterPowerSolution((0.0,), (0.0,), float("-inf"), False)
        best = np.flatnonzero(feas)[np.argmax(obj[feas])]
        return ClusterPowerSolution((float(axis[best]),), (float(rates[best]),),
                                    float(obj[best]), True)

    order = _sic_order(members)
    strong, weak = order[0], order[1]
    g_s = members[strong][1]
    g_w = members[weak][1]
    ps, pw = np.meshgrid(axis, axis, indexing="ij")
    sinr_s = ps * g_s / (pw * g_w + noise)
    sinr_w = pw * g_w / noise
    rate_s = b0 * np.log2(1.0 + sinr_s)
    rate_w = b0 * np.log2(1.0 + sinr_w)
    obj = np.log2(1.0 + sinr_s) + np.log2(1.0 + sinr_w)
    if objective == "min":
        obj = np.minimum(np.log2(1.0 + sinr_s), np.log2(1.0 + sinr_w))
    feas = (rate_s >= r_th) & (rate_w >= r_th)
    if not feas.any():
        return ClusterPowerSolution((0.0, 0.0), (0.0, 0.0), float("-inf"), False)
    masked = np.where(feas, obj, -np.inf)
    i, j = np.unravel_index(np.argmax(masked), masked.shape)
    powers = [0.0, 0.0]
    rates = [0.0, 0.0]
    powers[strong], powers[weak] = float(axis[i]), float(axis[j])
    rates[strong], rates[weak] = float(rate_s[i, j]), float(rate_w[i, j])
    return ClusterPowerSolution(tuple(powers), tuple(rates), float(masked[i, j]), True)


def solve_pairs_batch(ud_lo_gain, ud_hi_gain, p_max, noise_w, bandwidth_hz,
                      rate_threshold_bps):
    """Vectorized closed form for many 2-UD clusters at once.

    Inputs are arrays of the gains of the lower-id and higher-id member of
    each pair. Returns (p_lo, p_hi, rate_lo, rate_hi, objective, feasible)
    arrays matching solve_cluster_power with the sum objective.
    """
    g1 = np.asarray(ud_lo_gain, dtype=float)
    g2 = np.asarray(ud_hi_gain, dtype=float)
    # lower id wins gain ties, i.e. decodes first
    first_is_lo = (g1 >= g2)
    g_s = np.where(first_is_lo, g1, g2)
    g_w = np.where(first_is_lo, g2, g1)
    gamma_th = 2.0 ** (rate_threshold_bps / bandwidth_hz) - 1.0

    p_s = np.full_like(g1, p_max)
    with np.errstate(divide="ignore", invalid="ignore"):
        if gamma_th > 0.0:
            p_w_cap = (p_max * g_s / gamma_th - noise_w) / np.where(g_w > 0, g_w, np.nan)
            p_w = np.minimum(p_max, p_w_cap)
        else:
            p_w = np.full_like(g1, p_max)
        p_w = np.where(np.isfinite(p_w), p_w, p_max if gamma_th == 0.0 else -1.0)
    feasible = p_w >= 0.0
    p_w = np.where(feasible, p_w, 0.0)
    sinr_s = p_s * g_s / (p_w * g_w + noise_w)
    sinr_w = p_w * g_w / noise_w
    rate_s = bandwidth_hz * np.log2(1.0 + sinr_s)
    rate_w = bandwidth_hz * np.log2(1.0 + sinr_w)
    # same 1e-12 relative slack as the scalar path
    floor = rate_threshold_bps * (1.0 - 1e-12)
    feasible &= (rate_s >= floor) & (rate_w >= floor)
    objective = np.where(feasible, np.log2(1.0 + sinr_s) + np.log2(1.0 + sinr_w), -np.inf)
    p_lo = np.where(first_is_lo, p_s, p_w)
    p_hi = np.where(first_is_lo, p_w, p_s)
    r_lo = np.where(first_is_lo, rate_s, rate_w)
    r_hi = np.where(first_is_lo, rate_w, rate_s)
    return p_lo, p_hi, r_lo, r_hi, objective, feasible


def solve_singletons_batch(gain, p_max, noise_w, bandwidth_hz, rate_threshold_bps):
    """Vectorized single-UD solution: full power, feasibility by rate floor."""
    g = np.asarray(gain, dtype=float)
    snr = p_max * g / noise_w
    rate = bandwidth_hz * np.log2(1.0 + snr)
    objective = np.log2(1.0 + snr)
    feasible = rate >= rate_threshold_bps * (1.0 - 1e-12)
    power = np.full_like(g, p_max)
    return power, rate, objective, feasible
