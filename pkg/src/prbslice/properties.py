"""Trace invariant checks, experiment metrics, and the static baseline.

check_all() evaluates each named invariant independently over a finished
trace and reports the first violating timestep with the offending values, so
a deliberately corrupted trace pinpoints exactly which property it breaks.
compute_metrics() derives the experiment quantities (residual-share series,
action counts, offered throughput, premium share) from a trace.
baseline_overprovision() is the comparison strawman: a fixed premium
over-allocation decided at j=0 and never adjusted.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .model import ConfigError, NetworkConfig, ThroughputParams, nominal_throughput
from .oracle import AllocationTrace, SliceState, SystemState, assign_users

# The ten trace invariants of the forward semantics, in reporting order.
ORACLE_INVARIANTS = (
    "conservation",
    "partition-consistency",
    "slice-accounting",
    "share-immobility",
    "share-quantization",
    "signal-exclusion",
    "fairness",
    "optimality-band",
    "topup-gating",
    "argmin-assignment",
)

# check_all additionally tracks the overuse flag against the residual floor.
ALL_INVARIANTS = ORACLE_INVARIANTS + ("overuse-flag",)


@dataclass(frozen=True)
class InvariantResult:
    passed: bool
    first_violation_timestep: Optional[int] = None
    details: str = ""


@dataclass(frozen=True)
class PropertyReport:
    results: dict[str, InvariantResult]

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    def failing(self) -> list[str]:
        return [name for name, r in self.results.items() if not r.passed]

    def to_json(self) -> str:
        return json.dumps(
            {
                name: {
                    "passed": r.passed,
                    "first_violation_timestep": r.first_violation_timestep,
                    "details": r.details,
                }
                for name, r in self.results.items()
            },
            indent=2,
        )

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out)
        writer.writerow(["invariant", "passed", "first_violation_timestep",
                         "details"])
        for name, r in self.results.items():
            writer.writerow([name, int(r.passed),
                             "" if r.first_violation_timestep is None
                             else r.first_violation_timestep,
                             r.details])
        return out.getvalue()


def _first_fail(violations: list[tuple[int, str]]) -> InvariantResult:
    if not violations:
        return InvariantResult(passed=True)
    j, details = violations[0]
    return InvariantResult(passed=False, first_violation_timestep=j,
                           details=details)


def _mid_residual(sl: SliceState, cap: int) -> int:
    """Residual right after the user-event update, before any share move."""
    return sl.resi - (cap if sl.top else 0) + (cap if sl.ramp else 0)


def check_all(trace: AllocationTrace, config: NetworkConfig) -> PropertyReport:
    """Evaluate every invariant over the complete trace."""
    caps = [config.slice_by_id(i).usage_cap
            for i in range(1, config.num_slices + 1)]
    wins = [config.slice_by_id(i).t_win
            for i in range(1, config.num_slices + 1)]
    ms = [config.slice_by_id(i).m for i in range(1, config.num_slices + 1)]
    floor = config.overuse_floor
    states = trace.states
    results: dict[str, InvariantResult] = {}

    def scan(name, fn):
        violations = []
        for st in states:
            msg = fn(st)
            if msg:
                violations.append((st.j, msg))
        results[name] = _first_fail(violations)

    def scan_pairs(name, fn):
        violations = []
        for prev, cur in zip(states, states[1:]):
            msg = fn(prev, cur)
            if msg:
                violations.append((cur.j, msg))
        results[name] = _first_fail(violations)

    def conservation(st: SystemState):
        total = sum(sl.shr for sl in st.slices) + st.rp_shr
        if total != config.total_prbs:
            return f"sum of shares {total} != total_prbs {config.total_prbs}"

    def partition_consistency(st: SystemState):
        for k in sorted(config.partitions):
            expected = sum(st.slices[i - 1].shr for i in config.partitions[k])
            if st.pt_shr[k - 1] != expected:
                return (f"partition {k}: pt_shr {st.pt_shr[k - 1]} != "
                        f"sum of member shares {expected}")

    def slice_accounting(st: SystemState):
        for idx, sl in enumerate(st.slices):
            if sl.shr != sl.usg + sl.resi:
                return (f"slice {idx + 1}: shr {sl.shr} != usg {sl.usg} + "
                        f"resi {sl.resi}")
            if sl.usg != -(-sl.usr // ms[idx]):
                return (f"slice {idx + 1}: usg {sl.usg} != "
                        f"ceil({sl.usr}/{ms[idx]})")

    def share_immobility(prev: SystemState, cur: SystemState):
        for idx in range(len(cur.slices)):
            if cur.j % wins[idx] != 0:
                if cur.slices[idx].shr != prev.slices[idx].shr:
                    return (f"slice {idx + 1}: share moved mid-window "
                            f"({prev.slices[idx].shr} -> {cur.slices[idx].shr})")

    def share_quantization(prev: SystemState, cur: SystemState):
        for idx in range(len(cur.slices)):
            delta = cur.slices[idx].shr - prev.slices[idx].shr
            if delta not in (0, caps[idx], -caps[idx]):
                return (f"slice {idx + 1}: share moved by {delta}, "
                        f"cap is {caps[idx]}")

    def signal_exclusion(st: SystemState):
        for idx, sl in enumerate(st.slices):
            if sl.top and sl.ramp:
                return f"slice {idx + 1}: top and ramp both raised"

    def fairness(prev: SystemState, cur: SystemState):
        for idx, sl in enumerate(cur.slices):
            if sl.resi < 0:
                return f"slice {idx + 1}: negative residual {sl.resi}"
            if cur.j % wins[idx] == 0 and not cur.rp_ovr:
                mid = _mid_residual(sl, caps[idx])
                if mid <= caps[idx]:
                    grew = sl.shr - prev.slices[idx].shr
                    if not sl.top or grew != caps[idx]:
                        return (f"slice {idx + 1}: top-up due (mid residual "
                                f"{mid} <= cap {caps[idx]}) but share moved "
                                f"by {grew}")

    def fairness_initial(st: SystemState):
        for idx, sl in enumerate(st.slices):
            if sl.resi < 0:
                return f"slice {idx + 1}: negative residual {sl.resi}"

    def optimality_band(st: SystemState):
        for idx, sl in enumerate(st.slices):
            if sl.ramp:
                if not caps[idx] <= sl.resi < 2 * caps[idx]:
                    return (f"slice {idx + 1}: residual {sl.resi} outside "
                            f"[{caps[idx]}, {2 * caps[idx]}) after ramp-down")

    def topup_gating(st: SystemState):
        for idx, sl in enumerate(st.slices):
            if sl.top and st.rp_ovr:
                return f"slice {idx + 1}: top-up while residual overused"

    def argmin_assignment(prev: SystemState, cur: SystemState):
        for svc in config.services:
            owned = config.service_slices(svc.service_id)
            entered = [sl.slice_id for sl in owned
                       if cur.slices[sl.slice_id - 1].en]
            if len(entered) > 1:
                return (f"service {svc.service_id}: several slices admitted "
                        f"a user at once ({entered})")
            if len(owned) > 1 and entered:
                c = entered[0]
                c_usr = prev.slices[c - 1].usr
                for sl in owned:
                    s = sl.slice_id
                    if s == c:
                        continue
                    s_usr = prev.slices[s - 1].usr
                    if s_usr < c_usr or (s_usr == c_usr and s < c):
                        return (f"service {svc.service_id}: admitted into "
                                f"slice {c} (usr {c_usr}) over slice {s} "
                                f"(usr {s_usr})")

    def overuse_flag(prev: SystemState, cur: SystemState):
        expected = prev.rp_shr < floor
        if cur.rp_ovr != expected:
            return (f"rp_ovr {cur.rp_ovr} but previous residual share "
                    f"{prev.rp_shr} vs floor {floor}")

    scan("conservation", conservation)
    scan("partition-consistency", partition_consistency)
    scan("slice-accounting", slice_accounting)
    scan_pairs("share-immobility", share_immobility)
    scan_pairs("share-quantization", share_quantization)
    scan("signal-exclusion", signal_exclusion)
    # fairness needs pairs for the top-up leg but also covers state 0
    fair_violations = []
    if states:
        msg = fairness_initial(states[0])
        if msg:
            fair_violations.append((states[0].j, msg))
    for prev, cur in zip(states, states[1:]):
        msg = fairness(prev, cur)
        if msg:
            fair_violations.append((cur.j, msg))
    results["fairness"] = _first_fail(fair_violations)
    scan("optimality-band", optimality_band)
    scan("topup-gating", topup_gating)
    scan_pairs("argmin-assignment", argmin_assignment)
    scan_pairs("overuse-flag", overuse_flag)

    ordered = {name: results[name] for name in ALL_INVARIANTS}
    return PropertyReport(results=ordered)


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetricsBundle:
    residual_share: tuple[int, ...]            # rp_shr per j
    residual_fraction: tuple[float, ...]       # rp_shr / total_prbs per j
    topup_count: dict[int, int]                # per slice id
    rampdown_count: dict[int, int]
    topup_total: int
    rampdown_total: int
    throughput_offered: tuple[tuple[float, ...], ...]   # [slice][j] Mbps
    premium_share_pct: tuple[float, ...]       # per j
    blocked_entries: int

    def to_json(self) -> str:
        return json.dumps({
            "residual_share": list(self.residual_share),
            "residual_fraction": list(self.residual_fraction),
            "topup_count": {str(k): v for k, v in self.topup_count.items()},
            "rampdown_count": {str(k): v
                               for k, v in self.rampdown_count.items()},
            "topup_total": self.topup_total,
            "rampdown_total": self.rampdown_total,
            "throughput_offered": [list(row)
                                   for row in self.throughput_offered],
            "premium_share_pct": list(self.premium_share_pct),
            "blocked_entries": self.blocked_entries,
        }, indent=2)

    def to_csv(self) -> str:
        """Per-timestep table; per-slice throughput appears as thr_<i>."""
        out = io.StringIO()
        writer = csv.writer(out)
        n = len(self.throughput_offered)
        writer.writerow(["j", "rp_shr", "rp_fraction", "premium_share_pct"]
                        + [f"thr_{i + 1}" for i in range(n)])
        for j in range(len(self.residual_share)):
            writer.writerow(
                [j, self.residual_share[j],
                 f"{self.residual_fraction[j]:.6f}",
                 f"{self.premium_share_pct[j]:.6f}"]
                + [f"{self.throughput_offered[i][j]:.3f}" for i in range(n)])
        return out.getvalue()


def compute_metrics(
    trace: AllocationTrace,
    config: NetworkConfig,
    params: ThroughputParams = ThroughputParams(),
) -> MetricsBundle:
    states = trace.states
    caps = [config.slice_by_id(i).usage_cap
            for i in range(1, config.num_slices + 1)]
    premium = set(config.premium_slice_ids)
    per_prb = nominal_throughput(params, 1)

    tops = {i: 0 for i in range(1, config.num_slices + 1)}
    ramps = {i: 0 for i in range(1, config.num_slices + 1)}
    for prev, cur in zip(states, states[1:]):
        for idx in range(config.num_slices):
            delta = cur.slices[idx].shr - prev.slices[idx].shr
            if delta == caps[idx]:
                tops[idx + 1] += 1
            elif delta == -caps[idx]:
                ramps[idx + 1] += 1

    blocked = 0
    if trace.scenario is not None:
        for j in range(1, len(states)):
            if states[j].rp_ovr:
                blocked += sum(
                    1 for row in trace.scenario.arrivals if row[j - 1])

    return MetricsBundle(
        residual_share=tuple(st.rp_shr for st in states),
        residual_fraction=tuple(st.rp_shr / config.total_prbs
                                for st in states),
        topup_count=tops,
        rampdown_count=ramps,
        topup_total=sum(tops.values()),
        rampdown_total=sum(ramps.values()),
        throughput_offered=tuple(
            tuple(per_prb * st.slices[idx].usg for st in states)
            for idx in range(config.num_slices)
        ),
        premium_share_pct=tuple(
            100.0 * sum(sl.shr for i, sl in enumerate(st.slices, start=1)
                        if i in premium) / config.total_prbs
            for st in states
        ),
        blocked_entries=blocked,
    )


# ---------------------------------------------------------------------------
# static over-provisioning baseline
# ---------------------------------------------------------------------------

def baseline_overprovision(
    config: NetworkConfig,
    scenario,
    premium_share_fraction: Fraction | float,
) -> AllocationTrace:
    """Replay the user dynamics under a never-adjusted allocation.

    Premium slices split ceil(fraction * total_prbs) PRBs at j=0 (evenly,
    remainder to the lowest slice ids); every other slice keeps its usage
    cap.  No signals, no share moves, no residual-overuse gating: an entry
    that would need a PRB from a full slice is dropped, and a departure flag
    hitting an empty slice is ignored (admissibility is defined against the
    adaptive run, not this one).
    """
    config.validate()
    scenario.check_dimensions(config)
    frac = Fraction(premium_share_fraction).limit_denominator(10 ** 9)
    premium_ids = list(config.premium_slice_ids)
    caps = {sl.slice_id: sl.usage_cap for sl in config.slices}
    need = sum(caps[i] for i in premium_ids)
    if frac * config.total_prbs < need:
        raise ConfigError(
            f"premium fraction {frac} grants fewer PRBs than the premium "
            f"slices' combined cap {need}"
        )
    premium_total = math.ceil(frac * config.total_prbs)
    shares = dict(caps)
    base, rem = divmod(premium_total, len(premium_ids))
    for pos, i in enumerate(sorted(premium_ids)):
        shares[i] = base + (1 if pos < rem else 0)
    if any(shares[i] < caps[i] for i in premium_ids):
        raise ConfigError(
            "premium fraction too small to give every premium slice its cap")
    rp = config.total_prbs - sum(shares.values())
    if rp < 0:
        raise ConfigError(
            f"baseline allocation exceeds the budget by {-rp} PRBs")

    ms = {sl.slice_id: sl.m for sl in config.slices}
    wins = {sl.slice_id: sl.t_win for sl in config.slices}
    n = config.num_slices

    def make_state(j, usr, usg, entries, en, lv):
        slices = tuple(
            SliceState(
                usr=usr[i], shr=shares[i + 1], usg=usg[i],
                resi=shares[i + 1] - usg[i], entries=entries[i],
                en=en[i], lv=lv[i], top=False, ramp=False,
            )
            for i in range(n)
        )
        pt = tuple(
            sum(shares[i] for i in config.partitions[k])
            for k in sorted(config.partitions)
        )
        return SystemState(j=j, slices=slices, pt_shr=pt, rp_shr=rp,
                           rp_ovr=False)

    usr = [0] * n
    usg = [0] * n
    entries = [0] * n
    states = [make_state(0, usr, usg, entries, [False] * n, [False] * n)]
    for j in range(1, config.horizon + 1):
        arrivals = [row[j - 1] for row in scenario.arrivals]
        en = assign_users(config, usr, arrivals, rp_ovr=False)
        lv = [bool(row[j - 1]) and usr[idx] >= 1
              for idx, row in enumerate(scenario.departures)]
        for idx in range(n):
            i = idx + 1
            if en[idx] and not lv[idx]:
                would_use = -(-(usr[idx] + 1) // ms[i])
                if would_use > shares[i]:
                    en[idx] = False      # slice is full, entry dropped
        new_usr = [usr[idx] + (1 if en[idx] and not lv[idx] else 0)
                   - (1 if lv[idx] and not en[idx] else 0)
                   for idx in range(n)]
        entries = [
            (1 if en[idx] else 0) if j % wins[idx + 1] == 1 % wins[idx + 1]
            else entries[idx] + (1 if en[idx] else 0)
            for idx in range(n)
        ]
        usr = new_usr
        usg = [-(-usr[idx] // ms[idx + 1]) for idx in range(n)]
        states.append(make_state(j, usr, usg, entries, en, lv))
    return AllocationTrace(config=config, scenario=scenario,
                           states=tuple(states))
