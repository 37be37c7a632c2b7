"""
Star-shaped state-machine frames, purge functions, and the purge-based
noninterference / nondeducibility checks.

A machine with per-domain observation functions becomes a frame with one
hub location and one spoke location per domain: domain d feeds actions to
the hub on its input channel and receives observations on its output
channel.  After each accepted input the hub broadcasts one observation per
domain in fixed index order; this concrete output protocol is a modelling
choice the definitions are sensitive to, so it is stated here once and
surfaced in reports.

Purges map executions to the subsequence of input events a target domain
is entitled to know about.  The chain-based intransitive purge retains an
input when an increasing subsequence of influences links it to the target
domain; the chain may end at any event whose domain influences the target
directly, which is what makes the purge determine the target's visible
inputs and collapse to the simple purge under transitive policies.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

from .blur import PartitionBlur
from .disclosure import _cmpt_table
from .enumeration import Bound, enumerate_executions, enumerate_runs
from .events import CanonicalRun, EventSystem, canonicalize, is_execution
from .frames import Channel, Frame, Label, Location, Lts


class MachineError(ValueError):
    """Raised for malformed machine specifications."""


HUB = "M"


@dataclass(frozen=True)
class MachineSpec:
    """Finite nondeterministic state machine with security domains.

    ``influence`` must be reflexive; transitivity is not required.  The
    transition relation may be partial.
    """

    domains: tuple[str, ...]
    influence: frozenset[tuple[str, str]]
    actions: tuple[str, ...]
    action_domain: tuple[tuple[str, str], ...]
    outputs: tuple[str, ...]
    states: tuple[str, ...]
    initial: str
    transitions: frozenset[tuple[str, str, str]]
    obs: tuple[tuple[tuple[str, str], str], ...]

    @staticmethod
    def build(
        domains: Iterable[str],
        influence: Iterable[tuple[str, str]],
        action_domain: dict[str, str],
        outputs: Iterable[str],
        states: Iterable[str],
        initial: str,
        transitions: Iterable[tuple[str, str, str]],
        obs: dict[tuple[str, str], str],
    ) -> "MachineSpec":
        """Build and validate a machine; reflexive influence pairs are
        implicit and added here."""
        doms = tuple(sorted(domains))
        spec = MachineSpec(
            domains=doms,
            influence=frozenset((a, b) for a, b in influence)
            | {(d, d) for d in doms},
            actions=tuple(sorted(action_domain)),
            action_domain=tuple(sorted(action_domain.items())),
            outputs=tuple(sorted(outputs)),
            states=tuple(sorted(states)),
            initial=initial,
            transitions=frozenset(transitions),
            obs=tuple(sorted(obs.items())),
        )
        spec.validate()
        return spec

    def validate(self) -> None:
        doms = set(self.domains)
        if HUB in doms:
            raise MachineError(f"domain name {HUB!r} is reserved for the hub location")
        for d in doms:
            if (d, d) not in self.influence:
                raise MachineError(f"influence relation is not reflexive at {d!r}")
        for a, b in self.influence:
            if a not in doms or b not in doms:
                raise MachineError(f"influence pair ({a!r},{b!r}) names unknown domain")
        dom_map = dict(self.action_domain)
        for a in self.actions:
            if dom_map.get(a) not in doms:
                raise MachineError(f"action {a!r} has no domain")
        state_set = set(self.states)
        if self.initial not in state_set:
            raise MachineError("initial state not declared")
        for s, a, t in self.transitions:
            if s not in state_set or t not in state_set:
                raise MachineError("transition uses unknown state")
            if a not in dom_map:
                raise MachineError(f"transition uses unknown action {a!r}")
        obs_map = dict(self.obs)
        for s in self.states:
            for d in self.domains:
                if (s, d) not in obs_map:
                    raise MachineError(f"obs missing for state {s!r}, domain {d!r}")
            for o in (obs_map[(s, d)] for d in self.domains):
                if o not in set(self.outputs):
                    raise MachineError(f"obs uses undeclared output {o!r}")

    def dom(self, action: str) -> str:
        return dict(self.action_domain)[action]

    def observation(self, state: str, domain: str) -> str:
        return dict(self.obs)[(state, domain)]

    def influences(self, a: str, b: str) -> bool:
        return (a, b) in self.influence

    # Channel naming for the star frame.
    def in_chan(self, domain: str) -> str:
        return f"in_{domain}"

    def out_chan(self, domain: str) -> str:
        return f"out_{domain}"

    def input_channels(self) -> frozenset[str]:
        return frozenset(self.in_chan(d) for d in self.domains)

    def domain_channels(self, domain: str) -> frozenset[str]:
        """C_i: the target domain's own input and output channels."""
        return frozenset({self.in_chan(domain), self.out_chan(domain)})

    def visible_inputs(self, domain: str) -> frozenset[str]:
        return frozenset(
            self.in_chan(d) for d in self.domains if self.influences(d, domain)
        )


@dataclass(frozen=True)
class PurgeKind:
    """``kind`` is "gm" (retain inputs visible to the target) or "hy"
    (retain inputs chained to the target through the influence order)."""

    kind: str
    target: str

    def __post_init__(self) -> None:
        if self.kind not in ("gm", "hy"):
            raise MachineError(f"unknown purge kind {self.kind!r}")


@lru_cache(maxsize=128)
def star_frame(machine: MachineSpec) -> Frame:
    """The frame of a machine: hub plus one location per domain.

    The hub alternates strictly: accept one input on some domain's input
    channel (when the machine has a matching transition), then emit the
    new state's observation for every domain on the output channels, in
    domain order, then accept the next input.  Domain locations send any
    of their own actions and receive any output, in any order.
    """
    machine.validate()
    k = len(machine.domains)
    dom_map = dict(machine.action_domain)

    hub_states: set[str] = set()
    hub_trans: set[tuple[str, Label, str]] = set()

    def hub_state(s: str, j: int) -> str:
        return f"{s}#{j}"

    for s in machine.states:
        for j in range(k + 1):
            hub_states.add(hub_state(s, j))
    for (s, a, t) in machine.transitions:
        d = dom_map[a]
        hub_trans.add((hub_state(s, k), (machine.in_chan(d), a), hub_state(t, 0)))
    for s in machine.states:
        for j, d in enumerate(machine.domains):
            out_val = machine.observation(s, d)
            hub_trans.add(
                (hub_state(s, j), (machine.out_chan(d), out_val), hub_state(s, j + 1))
            )
    hub = Location(HUB, Lts(frozenset(hub_states), hub_state(machine.initial, k), frozenset(hub_trans)))

    locations = [hub]
    channels = []
    for d in machine.domains:
        trans: set[tuple[str, Label, str]] = set()
        for a in machine.actions:
            if dom_map[a] == d:
                trans.add(("idle", (machine.in_chan(d), a), "idle"))
        for o in machine.outputs:
            trans.add(("idle", (machine.out_chan(d), o), "idle"))
        locations.append(Location(d, Lts(frozenset({"idle"}), "idle", frozenset(trans))))
        channels.append(Channel(machine.in_chan(d), d, HUB))
        channels.append(Channel(machine.out_chan(d), HUB, d))

    data = set(machine.actions) | set(machine.outputs)
    return Frame.build(locations, channels, data)


# -- purges ----------------------------------------------------------------

#: A purged value: the retained input events as a (channel, message) sequence.
PurgedValue = tuple[Label, ...]


def input_sequence(machine: MachineSpec, run: CanonicalRun) -> tuple[Label, ...]:
    """Flatten an input-channel run of the star frame into a sequence.

    Star-frame executions are totally ordered, so their input restrictions
    are chains.
    """
    sys = run.to_event_system()
    idx = list(range(sys.n_events))
    for i, a in enumerate(idx):
        for b in idx[i + 1 :]:
            if not sys.comparable(a, b):
                raise MachineError("input run of a star frame must be totally ordered")
    idx.sort(key=lambda a: len(sys.down_set(a)))
    return tuple((sys.events[i].chan, sys.events[i].msg) for i in idx)


def purge_sequence(machine: MachineSpec, kind: PurgeKind, inputs: Sequence[Label]) -> PurgedValue:
    """Purge an input sequence for the target domain."""
    chan_dom = {machine.in_chan(d): d for d in machine.domains}
    for chan, _ in inputs:
        if chan not in chan_dom:
            raise MachineError(f"non-input channel {chan!r} in purge input")
    if kind.kind == "gm":
        vis = machine.visible_inputs(kind.target)
        return tuple(ev for ev in inputs if ev[0] in vis)
    # Chain purge: event i is retained when an increasing subsequence of
    # pairwise-influencing events starting at i ends in an event whose
    # domain influences the target.
    n = len(inputs)
    retained = [False] * n
    for i in range(n - 1, -1, -1):
        d_i = chan_dom[inputs[i][0]]
        if machine.influences(d_i, kind.target):
            retained[i] = True
            continue
        retained[i] = any(
            retained[j] and machine.influences(d_i, chan_dom[inputs[j][0]])
            for j in range(i + 1, n)
        )
    return tuple(ev for i, ev in enumerate(inputs) if retained[i])


def purge(machine: MachineSpec, kind: PurgeKind, execution: EventSystem) -> PurgedValue:
    """Purge an execution of the machine's star frame.

    Depends only on the execution's input events.
    """
    frame = star_frame(machine)
    try:
        check = is_execution(execution, frame)
    except Exception as exc:
        raise MachineError(f"not an execution of the star frame: {exc}") from exc
    if not check.ok:
        raise MachineError(f"not an execution of the star frame: {check.failures}")
    in_run = canonicalize(execution.restrict(machine.input_channels()))
    return purge_sequence(machine, kind, input_sequence(machine, in_run))


# -- validation of the purge laws -------------------------------------------


PurgeFn = Callable[[Sequence[Label]], PurgedValue]


def _purge_fn(machine: MachineSpec, kind: PurgeKind) -> PurgeFn:
    return lambda inputs: purge_sequence(machine, kind, inputs)


@dataclass(frozen=True)
class PurgeValidation:
    inputs_only_ok: bool
    visible_inputs_ok: bool
    witness: tuple[CanonicalRun, CanonicalRun] | None = None

    def __bool__(self) -> bool:
        return self.inputs_only_ok and self.visible_inputs_ok


def validate_purge(
    machine: MachineSpec,
    kind: PurgeKind,
    bound: Bound,
    purge_fn: PurgeFn | None = None,
) -> PurgeValidation:
    """Check the two purge-function laws over all bounded executions:
    equal inputs give equal purges, and equal purges give equal
    restrictions to the target's visible input channels.

    ``purge_fn`` substitutes a custom purge of input sequences, which is
    how broken purges are exercised as negative controls.
    """
    frame = star_frame(machine)
    fn = purge_fn if purge_fn is not None else _purge_fn(machine, kind)
    in_chans = machine.input_channels()
    vis = machine.visible_inputs(kind.target)

    rows = []
    for sys in enumerate_executions(frame, bound).systems:
        in_run = canonicalize(sys.restrict(in_chans))
        value = fn(input_sequence(machine, in_run))
        vis_run = canonicalize(sys.restrict(vis))
        rows.append((in_run, value, vis_run))

    # Purges computed from input runs satisfy the first law by
    # construction; recheck anyway since purge_fn is arbitrary.
    by_inputs: dict[CanonicalRun, tuple] = {}
    for in_run, value, _ in rows:
        if by_inputs.setdefault(in_run, value) != value:
            return PurgeValidation(False, False, None)

    by_value: dict[tuple, tuple[CanonicalRun, CanonicalRun]] = {}
    for in_run, value, vis_run in rows:
        if value not in by_value:
            by_value[value] = (in_run, vis_run)
        elif by_value[value][1] != vis_run:
            return PurgeValidation(True, False, (by_value[value][0], in_run))
    return PurgeValidation(True, True)


# -- noninterference and nondeducibility -------------------------------------


@dataclass(frozen=True)
class PurgeVerdict:
    holds: bool
    witness: tuple[CanonicalRun, CanonicalRun] | None = None

    def __bool__(self) -> bool:
        return self.holds


def _execution_rows(machine: MachineSpec, kind: PurgeKind, bound: Bound):
    frame = star_frame(machine)
    in_chans = machine.input_channels()
    ci = machine.domain_channels(kind.target)
    fn = _purge_fn(machine, kind)
    rows = []
    for sys in enumerate_executions(frame, bound).systems:
        in_run = canonicalize(sys.restrict(in_chans))
        ci_run = canonicalize(sys.restrict(ci))
        rows.append((fn(input_sequence(machine, in_run)), in_run, ci_run))
    return frame, rows


def check_ni(machine: MachineSpec, kind: PurgeKind, bound: Bound) -> PurgeVerdict:
    """Noninterference: purge-equal executions look identical on the
    target domain's own channels."""
    _, rows = _execution_rows(machine, kind, bound)
    by_value: dict[tuple, tuple[CanonicalRun, CanonicalRun]] = {}
    for value, in_run, ci_run in rows:
        if value not in by_value:
            by_value[value] = (in_run, ci_run)
        elif by_value[value][1] != ci_run:
            return PurgeVerdict(False, (by_value[value][0], in_run))
    return PurgeVerdict(True)


def check_nd(machine: MachineSpec, kind: PurgeKind, bound: Bound) -> PurgeVerdict:
    """Nondeducibility: for purge-equal executions, the second's inputs
    are compatible with the first's view of the target channels."""
    frame, rows = _execution_rows(machine, kind, bound)
    in_chans = machine.input_channels()
    ci = machine.domain_channels(kind.target)
    table = _cmpt_table(frame, ci, in_chans, bound)
    groups: dict[tuple, list[tuple[CanonicalRun, CanonicalRun]]] = {}
    for value, in_run, ci_run in rows:
        groups.setdefault(value, []).append((in_run, ci_run))
    for members in groups.values():
        ins = {in_run for in_run, _ in members}
        for in_run_a, ci_run_a in members:
            compat = table[ci_run_a]
            for in_run_b in ins:
                if in_run_b not in compat:
                    return PurgeVerdict(False, (ci_run_a, in_run_b))
    return PurgeVerdict(True)


def purge_blur(machine: MachineSpec, kind: PurgeKind, bound: Bound) -> PartitionBlur:
    """The blur induced by a purge: input runs are equivalent when they
    purge equally.  Its universe is the realized bounded input runs."""
    frame = star_frame(machine)
    fn = _purge_fn(machine, kind)
    universe = enumerate_runs(frame, machine.input_channels(), bound)
    blocks: dict[tuple, set[CanonicalRun]] = {}
    for run in universe:
        blocks.setdefault(fn(input_sequence(machine, run)), set()).add(run)
    ordered = sorted(blocks.items(), key=lambda kv: sorted(r.serialize() for r in kv[1]))
    return PartitionBlur(tuple(frozenset(v) for _, v in ordered))
