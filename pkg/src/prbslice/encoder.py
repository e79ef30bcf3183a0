"""Constraint emission: the allocation semantics as an SMT-LIB 2 script.

Each timestep contributes one block of assertions:

* slice layer: user-count, window-entry, and usage/residual updates, then the
  top-up / ramp-down signal rules at window boundaries and their mutual
  exclusion;
* partition layer: one guarded assertion per signal combination of the
  partition's boundary slices, moving shares by the signalled caps and the
  partition share by the net;
* system layer: the residual-overuse flag, the per-service entry rules
  (argmin over user counts for multi-slice services, lowest id on ties), and
  one guarded assertion per combination of partition moves adjusting the
  residual share.

Implications stated by the rules are made biconditional by explicit closure
assertions (flags are false in every uncovered case) and shares are frozen by
frame assertions away from boundaries, so the script has exactly one model
once the scenario flags are pinned.  Every assertion carries a provenance
tag; the vocabulary is the TAGS tuple below.

Integer variables use the Int sort (every quantity is a count), booleans the
Bool sort.  A per-slice auxiliary Int holds the residual value after the
user-event update and before any share adjustment; both the signal rules and
the partition bodies read it, which is what makes a user event and a share
move at the same boundary compose.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .model import NetworkConfig, constraint_count_bound
from .scenario import ScenarioTrace

# Single documented constant bounding emitted assertions against
# constraint_count_bound(); covers closure/frame companions and sub-cases.
BOUND_MULTIPLIER = 2

TAGS = (
    "initial", "scenario", "closure", "frame",
    "user-count", "window-entries", "usage-residual",
    "top-signal", "ramp-signal", "signal-conflict",
    "entry-single", "entry-argmin",
    "partition-adjust", "residual-adjust",
)


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class ConstraintSet:
    """Declarations plus tagged assertions, ready for text emission."""

    declarations: tuple[tuple[str, str], ...]   # (name, sort)
    assertions: tuple[tuple[str, str], ...]     # (tag, formula)

    @property
    def assertion_count(self) -> int:
        return len(self.assertions)


# -- variable naming --------------------------------------------------------

def v_usr(i, j): return f"sl_usr_{i}_{j}"
def v_shr(i, j): return f"sl_shr_{i}_{j}"
def v_usg(i, j): return f"sl_usg_{i}_{j}"
def v_resi(i, j): return f"sl_resi_{i}_{j}"
def v_rmid(i, j): return f"sl_rmid_{i}_{j}"
def v_ew(i, j): return f"sl_ew_{i}_{j}"
def v_en(i, j): return f"sl_en_{i}_{j}"
def v_lv(i, j): return f"sl_lv_{i}_{j}"
def v_top(i, j): return f"sl_top_{i}_{j}"
def v_ramp(i, j): return f"sl_ramp_{i}_{j}"
def v_pt(k, j): return f"pt_shr_{k}_{j}"
def v_rp(j): return f"rp_shr_{j}"
def v_ovr(j): return f"rp_ovr_{j}"
def v_se(mu, j): return f"ser_e_{mu}_{j}"


def _and(*parts: str) -> str:
    parts = tuple(p for p in parts if p)
    if not parts:
        return "true"
    return parts[0] if len(parts) == 1 else f"(and {' '.join(parts)})"


def _imp(guard: str, body: str) -> str:
    return f"(=> {guard} {body})"


def _plus(base: str, delta: int) -> str:
    if delta > 0:
        return f"(+ {base} {delta})"
    if delta < 0:
        return f"(- {base} {-delta})"
    return base


def encode(config: NetworkConfig, scenario: ScenarioTrace) -> ConstraintSet:
    """Build the full constraint system for (config, scenario)."""
    config.validate()
    scenario.check_dimensions(config)

    horizon = config.horizon
    slices = sorted(config.slices, key=lambda s: s.slice_id)
    caps = {sl.slice_id: sl.usage_cap for sl in slices}
    n = config.num_slices
    floor = config.overuse_floor

    decls: list[tuple[str, str]] = []
    asserts: list[tuple[str, str]] = []

    def decl(name: str, sort: str) -> None:
        decls.append((name, sort))

    def emit(tag: str, formula: str) -> None:
        asserts.append((tag, formula))

    # declarations
    for j in range(horizon + 1):
        for sl in slices:
            i = sl.slice_id
            for fn in (v_usr, v_shr, v_usg, v_resi, v_ew):
                decl(fn(i, j), "Int")
            if j >= 1:
                decl(v_rmid(i, j), "Int")
                for fn in (v_en, v_lv, v_top, v_ramp):
                    decl(fn(i, j), "Bool")
        for k in sorted(config.partitions):
            decl(v_pt(k, j), "Int")
        decl(v_rp(j), "Int")
        if j >= 1:
            decl(v_ovr(j), "Bool")
            for svc in sorted(config.services, key=lambda s: s.service_id):
                decl(v_se(svc.service_id, j), "Bool")

    # initial state
    for sl in slices:
        i = sl.slice_id
        emit("initial", f"(= {v_usr(i, 0)} 0)")
        emit("initial", f"(= {v_usg(i, 0)} 0)")
        emit("initial", f"(= {v_ew(i, 0)} 0)")
        emit("initial", f"(= {v_shr(i, 0)} {caps[i]})")
        emit("initial", f"(= {v_resi(i, 0)} {caps[i]})")
    for k in sorted(config.partitions):
        total = sum(caps[i] for i in config.partitions[k])
        emit("initial", f"(= {v_pt(k, 0)} {total})")
    emit("initial", f"(= {v_rp(0)} {config.initial_residual})")

    # scenario pins
    for j in range(1, horizon + 1):
        for svc in sorted(config.services, key=lambda s: s.service_id):
            flag = scenario.arrivals[svc.service_id - 1][j - 1]
            emit("scenario",
                 f"(= {v_se(svc.service_id, j)} {'true' if flag else 'false'})")
        for sl in slices:
            flag = scenario.departures[sl.slice_id - 1][j - 1]
            emit("scenario",
                 f"(= {v_lv(sl.slice_id, j)} {'true' if flag else 'false'})")

    for j in range(1, horizon + 1):
        # residual-overuse flag from the previous residual share
        emit("closure", f"(= {v_ovr(j)} (< {v_rp(j - 1)} {floor}))")

        # per-service entry rules
        for svc in sorted(config.services, key=lambda s: s.service_id):
            mu = svc.service_id
            owned = config.service_slices(mu)
            if len(owned) == 1:
                i = owned[0].slice_id
                guard = _and(f"(not {v_ovr(j)})", v_se(mu, j))
                emit("entry-single", _imp(guard, v_en(i, j)))
                emit("closure", _imp(f"(not {guard})", f"(not {v_en(i, j)})"))
            else:
                for cand in owned:
                    c = cand.slice_id
                    comps = []
                    for other in owned:
                        s = other.slice_id
                        if s == c:
                            continue
                        rel = "<=" if c < s else "<"
                        comps.append(
                            f"({rel} {v_usr(c, j - 1)} {v_usr(s, j - 1)})")
                    guard = _and(f"(not {v_ovr(j)})", v_se(mu, j), *comps)
                    emit("entry-argmin", _imp(guard, v_en(c, j)))
                    emit("closure",
                         _imp(f"(not {guard})", f"(not {v_en(c, j)})"))

        # slice layer
        for sl in slices:
            i = sl.slice_id
            en = v_en(i, j)
            lv = v_lv(i, j)
            up = _and(en, f"(not {lv})")
            down = _and(f"(not {en})", lv)
            both = _and(en, lv)
            neither = _and(f"(not {en})", f"(not {lv})")

            emit("user-count", _and(
                _imp(up, f"(= {v_usr(i, j)} (+ {v_usr(i, j - 1)} 1))"),
                _imp(down, f"(= {v_usr(i, j)} (- {v_usr(i, j - 1)} 1))"),
                _imp(both, f"(= {v_usr(i, j)} {v_usr(i, j - 1)})"),
                _imp(neither, f"(= {v_usr(i, j)} {v_usr(i, j - 1)})"),
            ))

            if j % sl.t_win == 1 % sl.t_win:
                emit("window-entries", _and(
                    _imp(en, f"(= {v_ew(i, j)} 1)"),
                    _imp(f"(not {en})", f"(= {v_ew(i, j)} 0)"),
                ))
            else:
                emit("window-entries", _and(
                    _imp(en, f"(= {v_ew(i, j)} (+ {v_ew(i, j - 1)} 1))"),
                    _imp(f"(not {en})", f"(= {v_ew(i, j)} {v_ew(i, j - 1)})"),
                ))

            inc = _and(en, f"(not {lv})",
                       f"(= (mod {v_usr(i, j)} {sl.m}) {1 % sl.m})")
            dec = _and(f"(not {en})", lv,
                       f"(= (mod {v_usr(i, j)} {sl.m}) 0)")
            emit("usage-residual", _and(
                _imp(inc, _and(f"(= {v_usg(i, j)} (+ {v_usg(i, j - 1)} 1))",
                               f"(= {v_rmid(i, j)} (- {v_resi(i, j - 1)} 1))")),
                _imp(dec, _and(f"(= {v_usg(i, j)} (- {v_usg(i, j - 1)} 1))",
                               f"(= {v_rmid(i, j)} (+ {v_resi(i, j - 1)} 1))")),
            ))
            emit("closure", _imp(
                _and(f"(not {inc})", f"(not {dec})"),
                _and(f"(= {v_usg(i, j)} {v_usg(i, j - 1)})",
                     f"(= {v_rmid(i, j)} {v_resi(i, j - 1)})"),
            ))

            if j % sl.t_win == 0:
                top_cond = _and(f"(not {v_ovr(j)})",
                                f"(<= {v_rmid(i, j)} {caps[i]})")
                emit("top-signal", _imp(top_cond, v_top(i, j)))
                emit("closure",
                     _imp(f"(not {top_cond})", f"(not {v_top(i, j)})"))
                ramp_cond = _and(
                    f"(>= (- {v_rmid(i, j)} {caps[i]}) {caps[i]})",
                    f"(= {v_ew(i, j)} 0)")
                emit("ramp-signal", _imp(ramp_cond, v_ramp(i, j)))
                emit("closure",
                     _imp(f"(not {ramp_cond})", f"(not {v_ramp(i, j)})"))
            else:
                emit("closure", f"(not {v_top(i, j)})")
                emit("closure", f"(not {v_ramp(i, j)})")

            emit("signal-conflict", _and(
                _imp(v_top(i, j), f"(not {v_ramp(i, j)})"),
                _imp(v_ramp(i, j), f"(not {v_top(i, j)})"),
            ))

        # partition layer
        for k in sorted(config.partitions):
            members = config.partitions[k]
            at_boundary = [i for i in members
                           if j % config.slice_by_id(i).t_win == 0]
            frozen = [i for i in members if i not in at_boundary]
            hold = [
                part
                for i in frozen
                for part in (f"(= {v_shr(i, j)} {v_shr(i, j - 1)})",
                             f"(= {v_resi(i, j)} {v_rmid(i, j)})")
            ]
            if not at_boundary:
                emit("frame",
                     _and(f"(= {v_pt(k, j)} {v_pt(k, j - 1)})", *hold))
                continue
            # one guarded case per signal combination of the boundary slices
            for combo in itertools.product((0, 1, 2), repeat=len(at_boundary)):
                guards = []
                body = list(hold)
                net = 0
                for i, sig in zip(at_boundary, combo):
                    if sig == 1:
                        guards.append(v_top(i, j))
                        body.append(
                            f"(= {v_shr(i, j)} (+ {v_shr(i, j - 1)} {caps[i]}))")
                        body.append(
                            f"(= {v_resi(i, j)} (+ {v_rmid(i, j)} {caps[i]}))")
                        net += caps[i]
                    elif sig == 2:
                        guards.append(v_ramp(i, j))
                        body.append(
                            f"(= {v_shr(i, j)} (- {v_shr(i, j - 1)} {caps[i]}))")
                        body.append(
                            f"(= {v_resi(i, j)} (- {v_rmid(i, j)} {caps[i]}))")
                        net -= caps[i]
                    else:
                        guards.append(_and(f"(not {v_top(i, j)})",
                                           f"(not {v_ramp(i, j)})"))
                        body.append(f"(= {v_shr(i, j)} {v_shr(i, j - 1)})")
                        body.append(f"(= {v_resi(i, j)} {v_rmid(i, j)})")
                body.append(f"(= {v_pt(k, j)} {_plus(v_pt(k, j - 1), net)})")
                emit("partition-adjust", _imp(_and(*guards), _and(*body)))

        # system layer: residual share, one case per partition-move combo
        ks = sorted(config.partitions)
        for combo in itertools.product((0, 1, 2), repeat=len(ks)):
            guards = []
            give_back = []   # (pt_prev - pt_now) terms, positive when freeing
            for k, move in zip(ks, combo):
                now, before = v_pt(k, j), v_pt(k, j - 1)
                if move == 1:
                    guards.append(f"(> {now} {before})")
                    give_back.append(f"(- {before} {now})")
                elif move == 2:
                    guards.append(f"(< {now} {before})")
                    give_back.append(f"(- {before} {now})")
                else:
                    guards.append(f"(= {now} {before})")
            if give_back:
                rhs = f"(+ {v_rp(j - 1)} {' '.join(give_back)})"
            else:
                rhs = v_rp(j - 1)
            emit("residual-adjust",
                 _imp(_and(*guards), f"(= {v_rp(j)} {rhs})"))

    cs = ConstraintSet(declarations=tuple(decls), assertions=tuple(asserts))
    if horizon >= 1:
        limit = BOUND_MULTIPLIER * constraint_count_bound(config)
        if cs.assertion_count > limit:
            raise EncodingError(
                f"emitted {cs.assertion_count} assertions, above the "
                f"documented bound {limit}"
            )
    return cs


def emit_smtlib(cs: ConstraintSet) -> str:
    """Render a ConstraintSet as a deterministic SMT-LIB 2 script."""
    lines = ["(set-logic QF_LIA)"]
    for name, sort in cs.declarations:
        lines.append(f"(declare-const {name} {sort})")
    for tag, formula in cs.assertions:
        lines.append(f"; [{tag}]")
        lines.append(f"(assert {formula})")
    lines.append("(check-sat)")
    if cs.declarations:
        lines.append("(get-model)")
    lines.append("")
    return "\n".join(lines)
