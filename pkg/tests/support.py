"""
Shared test machinery: randomized frame/machine generators and a naive
compatibility oracle kept independent of the library's canonicalization
pipeline.

Random frames are *budget-complete*: every execution of the frame fits
within the stated event budget, verified by enumerating one event past
the budget and rejecting the frame if anything reaches it.  On such
frames the bounded universe coincides with the unbounded one, so the
merge-based lemmas are exact rather than bound-approximate.
"""

from __future__ import annotations

import itertools
import random

from flowcut.enumeration import Bound, enumerate_executions
from flowcut.frames import Channel, ExplicitTraces, Frame, Location, validate_frame
from flowcut.purge import MachineSpec


# -- random budget-complete frames -------------------------------------------


def _candidate_frame(rng: random.Random, max_locations: int, max_channels: int, data_size: int) -> Frame:
    n_locs = rng.randint(2, max_locations)
    loc_ids = [f"L{i}" for i in range(n_locs)]
    n_chans = rng.randint(1, max_channels)
    channels = []
    for i in range(n_chans):
        sender = rng.choice(loc_ids)
        recipient = rng.choice(loc_ids)
        channels.append(Channel(f"c{i}", sender, recipient))
    values = [str(v) for v in range(rng.randint(1, data_size))]

    # Behaviors come from a handful of shared global histories so that the
    # synchronized steps actually fire.
    histories = []
    for _ in range(rng.randint(1, 3)):
        length = rng.randint(1, 4)
        histories.append(
            [(rng.choice(channels).id, rng.choice(values)) for _ in range(length)]
        )
    touching = {
        c.id: {c.sender, c.recipient} for c in channels
    }
    locations = []
    for lid in loc_ids:
        projections = []
        for h in histories:
            projections.append([lab for lab in h if lid in touching[lab[0]]])
        locations.append(Location(lid, ExplicitTraces.of(*projections)))
    return Frame.build(locations, channels, values)


def random_budget_complete_frame(
    rng: random.Random,
    bound: int,
    max_locations: int = 4,
    max_channels: int = 6,
    data_size: int = 2,
) -> Frame:
    """A random well-formed frame whose every execution has <= ``bound``
    events."""
    while True:
        frame = _candidate_frame(rng, max_locations, max_channels, data_size)
        if not validate_frame(frame).ok:
            continue
        probe = enumerate_executions(frame, Bound(bound + 1))
        sizes = [s.n_events for s in probe.systems]
        if max(sizes) <= bound and max(sizes) > 0:
            return frame


def random_channel_subset(rng: random.Random, frame: Frame, avoid: frozenset[str] = frozenset()):
    pool = [c for c in frame.channel_ids if c not in avoid]
    if not pool:
        return frozenset()
    k = rng.randint(1, len(pool))
    return frozenset(rng.sample(pool, k))


def disjoint_union(frame_a: Frame, frame_b: Frame) -> Frame:
    """Two frames glued side by side with renamed ids (no connecting
    channels), giving a disconnected frame."""

    def rename(frame: Frame, tag: str) -> tuple[list[Location], list[Channel]]:
        locs = []
        for loc in frame.locations:
            spec = loc.behavior
            assert isinstance(spec, ExplicitTraces)
            traces = frozenset(
                tuple((f"{tag}{c}", v) for c, v in t) for t in spec.traces
            )
            locs.append(Location(f"{tag}{loc.id}", ExplicitTraces(traces)))
        chans = [
            Channel(f"{tag}{c.id}", f"{tag}{c.sender}", f"{tag}{c.recipient}")
            for c in frame.channels
        ]
        return locs, chans

    locs_a, chans_a = rename(frame_a, "a_")
    locs_b, chans_b = rename(frame_b, "b_")
    return Frame.build(locs_a + locs_b, chans_a + chans_b, frame_a.data | frame_b.data)


# -- random machines -----------------------------------------------------------


def random_machine(rng: random.Random, transitive: bool = False) -> MachineSpec:
    k = rng.randint(1, 3)
    domains = [f"d{i}" for i in range(k)]
    influence = {(d, d) for d in domains}
    for a, b in itertools.permutations(domains, 2):
        if rng.random() < 0.4:
            influence.add((a, b))
    if transitive:
        changed = True
        while changed:
            changed = False
            for (a, b) in list(influence):
                for (b2, c) in list(influence):
                    if b == b2 and (a, c) not in influence:
                        influence.add((a, c))
                        changed = True
    n_states = rng.randint(1, 3)
    states = [f"s{i}" for i in range(n_states)]
    n_actions = rng.randint(1, 3)
    action_domain = {f"a{i}": rng.choice(domains) for i in range(n_actions)}
    outputs = [f"o{i}" for i in range(rng.randint(1, 2))]
    transitions = set()
    for s in states:
        for a in action_domain:
            for _ in range(rng.randint(0, 2)):
                transitions.add((s, a, rng.choice(states)))
    obs = {(s, d): rng.choice(outputs) for s in states for d in domains}
    return MachineSpec.build(
        domains=domains,
        influence=influence,
        action_domain=action_domain,
        outputs=outputs,
        states=states,
        initial=states[0],
        transitions=transitions,
        obs=obs,
    )


# -- naive oracle ---------------------------------------------------------------
#
# An independent route to compatibility sets: enumerate firing histories
# directly, keep raw (labels, order-matrix) posets, restrict by slicing,
# and compare by brute-force bijection search.  No CanonicalRun machinery.


def naive_histories(frame: Frame, bound: int) -> list[list[tuple[str, str]]]:
    from flowcut.frames import behavior_start, behavior_step

    behaviors = {loc.id: loc.behavior for loc in frame.locations}
    out: list[list[tuple[str, str]]] = []

    def walk(history, config):
        out.append(list(history))
        if len(history) >= bound:
            return
        for chan in frame.channels:
            ends = {chan.sender, chan.recipient}
            for value in sorted(frame.data):
                label = (chan.id, value)
                nxt = {}
                for loc in ends:
                    step = behavior_step(behaviors[loc], config[loc], label)
                    if step is None:
                        break
                    nxt[loc] = step
                else:
                    config2 = dict(config)
                    config2.update(nxt)
                    history.append(label)
                    walk(history, config2)
                    history.pop()

    walk([], {lid: behavior_start(spec) for lid, spec in behaviors.items()})
    return out


def naive_poset(frame: Frame, history: list[tuple[str, str]]):
    """(labels, strict order matrix): the least order making each
    location's events a chain, closed with Floyd-Warshall."""
    n = len(history)
    touching = {c.id: {c.sender, c.recipient} for c in frame.channels}
    order = [[False] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if touching[history[i][0]] & touching[history[j][0]]:
                order[i][j] = True
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if order[i][k] and order[k][j]:
                    order[i][j] = True
    return list(history), order


def naive_restrict(poset, chans):
    labels, order = poset
    keep = [i for i, (c, _) in enumerate(labels) if c in chans]
    new_labels = [labels[i] for i in keep]
    new_order = [[order[a][b] for b in keep] for a in keep]
    return new_labels, new_order


def naive_iso(p1, p2) -> bool:
    labels1, order1 = p1
    labels2, order2 = p2
    n = len(labels1)
    if n != len(labels2):
        return False
    if sorted(labels1) != sorted(labels2):
        return False
    for perm in itertools.permutations(range(n)):
        if any(labels1[i] != labels2[perm[i]] for i in range(n)):
            continue
        if all(
            order1[i][j] == order2[perm[i]][perm[j]]
            for i in range(n)
            for j in range(n)
        ):
            return True
    return False


def naive_compatible_runs(frame: Frame, observed, source, bound: int, observed_poset):
    """Representatives (up to isomorphism) of the source restrictions of
    all bounded executions whose observed restriction matches."""
    reps = []
    for history in naive_histories(frame, bound):
        poset = naive_poset(frame, history)
        if not naive_iso(naive_restrict(poset, observed), observed_poset):
            continue
        src = naive_restrict(poset, source)
        if not any(naive_iso(src, rep) for rep in reps):
            reps.append(src)
    return reps


def canonical_to_naive(run) -> tuple[list[tuple[str, str]], list[list[bool]]]:
    """Bridge a pipeline run into the naive poset format for comparison."""
    sys = run.to_event_system()
    labels = [(e.chan, e.msg) for e in sys.events]
    n = len(labels)
    order = [[(a, b) in sys.strict for b in range(n)] for a in range(n)]
    return labels, order
