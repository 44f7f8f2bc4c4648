"""Closed-form local CPU allocation and AP-to-MEC admission control."""

from dataclasses import dataclass

from .model import backhaul_rate, local_cost


@dataclass(frozen=True)
class LocalAllocation:
    f_loc: dict     # ap_id -> allocated cycles/s
    x: dict         # ap_id -> True when the group must offload


@dataclass(frozen=True)
class AdmissionPlan:
    y: dict             # ap_id -> admitted flag
    assignment: dict    # ap_id -> mec_id, injective


def allocate_local(groups: dict, f_loc_max: float, rel_tol: float = 1e-9) -> LocalAllocation:
    """Three-case closed form per AP group.

    Demand D = total cycles / (group size * tightest deadline). D below the
    cap gets f = D with no offload; D at the cap (within rel_tol) gets the
    cap; D above the cap flags the group for offloading (f_loc then holds
    the cap as the best-effort fallback frequency). Empty groups are
    skipped with x False and f 0.
    """
    if f_loc_max <= 0:
        raise ValueError("f_loc_max must be positive")
    f_out = {}
    x_out = {}
    for ap_id, tasks in groups.items():
        if not tasks:
            f_out[ap_id] = 0.0
            x_out[ap_id] = False
            continue
        cycles = sum(t.cycles for t in tasks)
        deadline = min(t.deadline_s for t in tasks)
        demand = cycles / (len(tasks) * deadline)
        if abs(demand - f_loc_max) <= rel_tol * f_loc_max:
            f_out[ap_id] = f_loc_max
            x_out[ap_id] = False
        elif demand < f_loc_max:
            f_out[ap_id] = demand
            x_out[ap_id] = False
        else:
            f_out[ap_id] = f_loc_max
            x_out[ap_id] = True
    return LocalAllocation(f_out, x_out)


def first_layer_weight(group, f_loc: float, weights, term_weights=(1.0, 1.0)) -> float:
    """Offload urgency of a group: its local delay plus local energy.

    group is a sequence of (Task, upload_rate_bps); term_weights rescales
    the (delay, energy) contributions if the two are to be balanced.
    """
    if not group:
        return 0.0
    d, e = local_cost(group, f_loc, weights)
    return term_weights[0] * d + term_weights[1] * e


def second_layer_weight(tasks, ap, mec, channel, bandwidth_scaled: bool = True) -> float:
    """Affinity of an AP group for a MEC: backhaul rate times the mean
    density over the group's total bits."""
    total_bits = sum(t.size_bits for t in tasks)
    if total_bits <= 0:
        raise ValueError("second-layer weight undefined for an empty group")
    mean_density = sum(t.density_cpb for t in tasks) / len(tasks)
    rate = backhaul_rate(ap, mec, channel, bandwidth_scaled)
    return rate * mean_density / total_bits


def admission_control(g_by_ap: dict, affinity: dict, mec_ids) -> AdmissionPlan:
    """Admit up to len(mec_ids) offload candidates.

    Candidates are served in descending first-layer weight (ties by AP id);
    each admitted AP takes its highest-affinity surviving MEC (ties by MEC
    id). The assignment is injective; everyone else stays unadmitted.
    """
    order = sorted(g_by_ap, key=lambda ap: (-g_by_ap[ap], ap))
    remaining = list(mec_ids)
    y = {ap: False for ap in g_by_ap}
    assignment = {}
    for ap in order[:min(len(remaining), len(order))]:
        if not remaining:
            break
        best = max(remaining, key=lambda k: (affinity[(ap, k)], -k))
        remaining.remove(best)
        y[ap] = True
        assignment[ap] = best
    return AdmissionPlan(y, assignment)
