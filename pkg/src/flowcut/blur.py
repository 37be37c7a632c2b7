"""
Blur operators, limited flow, the cut-blur principle, and frame
composition over a shared core.

A blur operator is a set function satisfying Inclusion, Idempotence, and
commutation with unions; a compatibility set fixed by the blur is what an
observer is allowed to pin down.  Blur universes are always the bounded
local-run sets, and blur application never escapes the universe.

The theorem-shaped operations here (cut-blur, composition) report their
antecedent and consequent separately instead of assuming the implication:
a failed implication flags an implementation bug, not a refuted theorem.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .cuts import ChannelSetTriple, is_cut
from .disclosure import _cmpt_table
from .enumeration import Bound, enumerate_runs
from .events import CanonicalRun, canonicalize
from .frames import Frame, shortest_language_difference, trace_specs_equal


class BlurError(ValueError):
    """Raised for runs outside the universe or malformed blur specs."""


class SharedCoreError(ValueError):
    """The claimed shared core fails endpoint or trace agreement, or its
    side condition is unverified."""


# -- blur specifications ---------------------------------------------------


@dataclass(frozen=True)
class IdentityBlur:
    """The maximally permissive policy: f(S) = S."""

    def apply(self, s: frozenset[CanonicalRun], universe: frozenset[CanonicalRun]):
        return s


@dataclass(frozen=True)
class AllBlur:
    """The no-disclosure policy: f(S) = the whole (bounded) universe."""

    def apply(self, s: frozenset[CanonicalRun], universe: frozenset[CanonicalRun]):
        return universe


@dataclass(frozen=True)
class PartitionBlur:
    """Union of the equivalence classes meeting S, for an explicitly given
    partition of the run universe."""

    blocks: tuple[frozenset[CanonicalRun], ...]

    @staticmethod
    def from_equivalence(
        universe: Iterable[CanonicalRun],
        rel: Callable[[CanonicalRun, CanonicalRun], bool],
    ) -> "PartitionBlur":
        """Group the universe by the relation, verifying exhaustively that
        it is an equivalence relation there."""
        runs = sorted(universe, key=CanonicalRun.serialize)
        blocks: list[list[CanonicalRun]] = []
        for r in runs:
            if not rel(r, r):
                raise BlurError("relation is not reflexive")
            for block in blocks:
                if rel(block[0], r):
                    block.append(r)
                    break
            else:
                blocks.append([r])
        # Membership chosen by the representative must agree with the
        # relation on every pair, which fails exactly when the relation is
        # not symmetric and transitive over the universe.
        for i, b1 in enumerate(blocks):
            for b2 in blocks[i:]:
                same = b1 is b2
                for x in b1:
                    for y in b2:
                        if rel(x, y) != same or rel(y, x) != same:
                            raise BlurError(
                                "relation is not an equivalence on the universe"
                            )
        return PartitionBlur(tuple(frozenset(b) for b in blocks))

    def block_of(self, run: CanonicalRun) -> frozenset[CanonicalRun]:
        for block in self.blocks:
            if run in block:
                return block
        raise BlurError("run outside the partitioned universe")

    def apply(self, s: frozenset[CanonicalRun], universe: frozenset[CanonicalRun]):
        out: set[CanonicalRun] = set()
        for r in s:
            out |= self.block_of(r)
        return frozenset(out)


@dataclass(frozen=True)
class PermutationBlur:
    """Closure under value-reallocating permutations of member channels.

    A permutation maps each member channel's message sequence to another
    member channel of the same block, leaving the event skeleton (channel
    event counts and order shape) fixed; permutations are only applicable
    between channels carrying equally many events.  ``fixed`` members may
    only map to themselves.
    """

    members: tuple[str, ...]
    blocks: tuple[frozenset[str], ...] | None = None
    fixed: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if self.blocks is not None:
            flat = [m for b in self.blocks for m in b]
            if sorted(flat) != sorted(self.members):
                raise BlurError("blocks must partition the member channels")

    def _permutations(self) -> list[dict[str, str]]:
        groups = self.blocks if self.blocks is not None else (frozenset(self.members),)
        per_group: list[list[dict[str, str]]] = []
        for g in groups:
            movable = sorted(g - self.fixed)
            maps = []
            for img in itertools.permutations(movable):
                m = dict(zip(movable, img))
                m.update({x: x for x in g & self.fixed})
                maps.append(m)
            per_group.append(maps)
        out = []
        for combo in itertools.product(*per_group):
            merged: dict[str, str] = {}
            for m in combo:
                merged.update(m)
            out.append(merged)
        return out

    def act(self, pi: dict[str, str], run: CanonicalRun) -> CanonicalRun | None:
        """Apply one permutation; None when event counts are incompatible."""
        msgs = dict(run.channels)
        new_channels = []
        for chan, seq in run.channels:
            if chan in pi:
                src = msgs.get(pi[chan], ())
                if len(src) != len(seq):
                    return None
                new_channels.append((chan, src))
            else:
                new_channels.append((chan, seq))
        for chan in pi:
            if chan not in msgs and msgs.get(pi[chan], ()):
                return None
        return CanonicalRun(tuple(new_channels), run.order)

    def orbit(self, run: CanonicalRun) -> frozenset[CanonicalRun]:
        out = {run}
        for pi in self._permutations():
            img = self.act(pi, run)
            if img is not None:
                out.add(img)
        return frozenset(out)

    def apply(self, s: frozenset[CanonicalRun], universe: frozenset[CanonicalRun]):
        out: set[CanonicalRun] = set()
        for r in s:
            out |= self.orbit(r)
        return frozenset(out) & universe


@dataclass(frozen=True)
class SelectionBlur:
    """Two runs are equivalent when their restrictions to the selected
    events are isomorphic; selection is declarative over (channel, value)
    so blur specs can live in frame files.  The name is reporting
    metadata and does not affect equality."""

    name: str = field(default="selection", compare=False)
    channels: frozenset[str] | None = None
    values: frozenset[str] | None = None

    def selects(self, chan: str, msg: str) -> bool:
        if self.channels is not None and chan not in self.channels:
            return False
        if self.values is not None and msg not in self.values:
            return False
        return True

    def select_key(self, run: CanonicalRun) -> str:
        sys = run.to_event_system()
        keep = [i for i, e in enumerate(sys.events) if self.selects(e.chan, e.msg)]
        return canonicalize(sys.induced(keep)).serialize()

    def apply(self, s: frozenset[CanonicalRun], universe: frozenset[CanonicalRun]):
        bad = s - universe
        if bad:
            raise BlurError("run outside universe")
        wanted = {self.select_key(r) for r in s}
        return frozenset(r for r in universe if self.select_key(r) in wanted)


@dataclass(frozen=True)
class TableBlur:
    """Explicit action on singletons, extended by union.  Inclusion on
    singletons is enforced at construction; idempotence is validated, not
    assumed, which admits blurs no partition generates."""

    table: tuple[tuple[CanonicalRun, frozenset[CanonicalRun]], ...]

    def __post_init__(self) -> None:
        for run, image in self.table:
            if run not in image:
                raise BlurError("table violates Inclusion: a run misses its own image")

    def image(self, run: CanonicalRun) -> frozenset[CanonicalRun]:
        for r, image in self.table:
            if r == run:
                return image
        raise BlurError("run outside the tabled universe")

    def apply(self, s: frozenset[CanonicalRun], universe: frozenset[CanonicalRun]):
        out: set[CanonicalRun] = set()
        for r in s:
            out |= self.image(r)
        return frozenset(out)


BlurSpec = IdentityBlur | AllBlur | PartitionBlur | PermutationBlur | SelectionBlur | TableBlur


def blur_apply(
    blur: BlurSpec,
    s: Iterable[CanonicalRun],
    universe: Iterable[CanonicalRun],
) -> frozenset[CanonicalRun]:
    """Apply a blur to a set of runs within its universe."""
    sset = frozenset(s)
    uni = frozenset(universe)
    if not sset <= uni:
        raise BlurError("run outside universe")
    return blur.apply(sset, uni)


# -- blur validation -------------------------------------------------------


@dataclass(frozen=True)
class BlurValidation:
    inclusion_ok: bool
    idempotence_ok: bool
    union_ok: bool
    partition_generated: bool

    @property
    def is_blur(self) -> bool:
        return self.inclusion_ok and self.idempotence_ok and self.union_ok

    def __bool__(self) -> bool:
        return self.is_blur


def validate_blur(blur: BlurSpec, universe: Iterable[CanonicalRun]) -> BlurValidation:
    """Check Inclusion, Idempotence, and Union on the bounded universe.

    Union is checked on singleton decompositions and a split of the
    universe; every form here computes f(S) from singleton images, so a
    union failure indicates a broken spec rather than a broken law.  The
    report also says whether the blur is generated by a partition: a blur
    can pass all three laws while no equivalence relation produces it.
    """
    uni = frozenset(universe)
    runs = sorted(uni, key=CanonicalRun.serialize)
    singleton_image = {r: blur_apply(blur, {r}, uni) for r in runs}

    inclusion = all(r in singleton_image[r] for r in runs)

    samples: list[frozenset[CanonicalRun]] = [frozenset({r}) for r in runs]
    samples.append(uni)
    half = frozenset(runs[: len(runs) // 2])
    samples.extend([half, uni - half])
    idempotence = True
    for s in samples:
        once = blur_apply(blur, s, uni)
        if blur_apply(blur, once, uni) != once:
            idempotence = False
            break

    union = True
    for s in samples:
        expected: set[CanonicalRun] = set()
        for r in s:
            expected |= singleton_image[r]
        if blur_apply(blur, s, uni) != frozenset(expected):
            union = False
            break

    partition = True
    for a in runs:
        image = singleton_image[a]
        for b in image:
            if singleton_image.get(b) != image:
                partition = False
                break
        if not partition:
            break

    return BlurValidation(inclusion, idempotence, union, partition)


# -- limited flow ----------------------------------------------------------


@dataclass(frozen=True)
class FlowCheck:
    holds: bool
    failing_observed: CanonicalRun | None = None
    unblurred: CanonicalRun | None = None

    def __bool__(self) -> bool:
        return self.holds


def f_limits_flow(
    frame: Frame,
    source: Iterable[str],
    observed: Iterable[str],
    blur: BlurSpec,
    bound: Bound,
) -> FlowCheck:
    """True iff every observation's compatibility set is fixed by the blur.

    On failure, reports the observed run plus a run the blur adds to the
    compatibility set without it being compatible.
    """
    src = frame.check_channels(source)
    obs = frame.check_channels(observed)
    universe = enumerate_runs(frame, src, bound)
    table = _cmpt_table(frame, obs, src, bound)
    for b_o in sorted(table, key=CanonicalRun.serialize):
        compat = table[b_o]
        blurred = blur_apply(blur, compat, universe)
        if blurred != compat:
            extra = blurred - compat
            witness = min(extra, key=CanonicalRun.serialize) if extra else None
            return FlowCheck(False, b_o, witness)
    return FlowCheck(True)


@dataclass(frozen=True)
class CutBlurVerdict:
    antecedent: FlowCheck
    consequent: FlowCheck
    implication_holds: bool

    def __bool__(self) -> bool:
        return self.implication_holds


def verify_cut_blur(
    frame: Frame,
    triple: ChannelSetTriple,
    blur: BlurSpec,
    bound: Bound,
) -> CutBlurVerdict:
    """Check limited flow into the cut and into the sink, reporting both.

    The implication (flow limited to the cut implies flow limited to the
    sink) should never fail; a failure detects an implementation bug.
    """
    check = is_cut(frame, triple)
    if not check.is_cut:
        raise BlurError("the given triple is not a cut")
    antecedent = f_limits_flow(frame, triple.source, triple.cut, blur, bound)
    consequent = f_limits_flow(frame, triple.source, triple.sink, blur, bound)
    return CutBlurVerdict(antecedent, consequent, (not antecedent.holds) or consequent.holds)


# -- shared cores and composition -------------------------------------------


@dataclass(frozen=True)
class SharedCore:
    """A location set common to two frames with identical endpoints and
    traces; its boundary channels form the cut for composition."""

    frame1: Frame
    frame2: Frame
    core_locations: frozenset[str]
    left0: frozenset[str]
    cut0: frozenset[str]
    right1: frozenset[str]
    right2: frozenset[str]
    run_inclusion_ok: bool
    run_inclusion_counterexample: CanonicalRun | None
    bound: Bound


def _pends_of(frame: Frame, loc: str) -> frozenset[tuple[str, str]]:
    out: set[tuple[str, str]] = set()
    for c in frame.channels:
        if c.sender == loc:
            out.add(("entry", c.id))
        if c.recipient == loc:
            out.add(("exit", c.id))
    return frozenset(out)


def build_shared_core(frame1: Frame, frame2: Frame, l0: Iterable[str], bound: Bound) -> SharedCore:
    """Validate a shared location set and derive the channel partition.

    Endpoint sets must agree exactly on the core; trace sets are compared
    exactly for explicit/LTS pairs of the same form and to the bound
    otherwise.  The side condition (the second frame has no new cut runs)
    is checked by enumeration and recorded, not assumed.
    """
    core = frozenset(l0)
    for frame, tag in ((frame1, "first"), (frame2, "second")):
        missing = core - set(frame.location_ids)
        if missing:
            raise SharedCoreError(f"core location {min(missing)!r} missing from the {tag} frame")

    depth = bound.max_total_events
    for loc in sorted(core):
        p1, p2 = _pends_of(frame1, loc), _pends_of(frame2, loc)
        if p1 != p2:
            diff = min(p1 ^ p2)
            raise SharedCoreError(f"endpoint mismatch at {loc!r}: {diff} held in one frame only")
        b1 = frame1.location(loc).behavior
        b2 = frame2.location(loc).behavior
        if not trace_specs_equal(b1, b2, depth):
            witness = shortest_language_difference(b1, b2, depth + 1)
            raise SharedCoreError(f"trace mismatch at {loc!r}: first differing trace {witness}")

    left0: set[str] = set()
    cut0: set[str] = set()
    right1: set[str] = set()
    for c in frame1.channels:
        inside = (c.sender in core) + (c.recipient in core)
        if inside == 2:
            left0.add(c.id)
        elif inside == 1:
            cut0.add(c.id)
        else:
            right1.add(c.id)
    right2 = {
        c.id
        for c in frame2.channels
        if c.sender not in core and c.recipient not in core
    }

    runs2 = enumerate_runs(frame2, cut0, bound)
    runs1 = enumerate_runs(frame1, cut0, bound)
    extra = runs2 - runs1
    counterexample = min(extra, key=CanonicalRun.serialize) if extra else None
    return SharedCore(
        frame1,
        frame2,
        core,
        frozenset(left0),
        frozenset(cut0),
        frozenset(right1),
        frozenset(right2),
        not extra,
        counterexample,
        bound,
    )


@dataclass(frozen=True)
class CompositionVerdict:
    antecedent: FlowCheck
    consequent: FlowCheck
    locality_ok: bool
    implication_holds: bool

    def __bool__(self) -> bool:
        return self.implication_holds and self.locality_ok


def verify_composition(
    core: SharedCore,
    source: Iterable[str],
    observed: Iterable[str],
    blur: BlurSpec,
    bound: Bound,
) -> CompositionVerdict:
    """Transport a flow limit across the shared core.

    Checks the blur limit from the source to the core boundary in the
    first frame, then asserts the same limit from the source to the
    observed channels of the second frame.  Also checks boundary locality:
    for every cut run both frames can produce, their compatibility sets
    back into the core coincide.
    """
    src = frozenset(source)
    obs = frozenset(observed)
    if not src <= core.left0:
        raise SharedCoreError("source channels must lie inside the shared core")
    if not obs <= core.right2:
        raise SharedCoreError("observed channels must lie beyond the core in the second frame")
    if not core.run_inclusion_ok:
        raise SharedCoreError(
            "side condition unverified: the second frame has cut runs the first lacks"
        )

    antecedent = f_limits_flow(core.frame1, src, core.cut0, blur, bound)
    consequent = f_limits_flow(core.frame2, src, obs, blur, bound)

    t1 = _cmpt_table(core.frame1, core.cut0, src, bound)
    t2 = _cmpt_table(core.frame2, core.cut0, src, bound)
    shared_runs = set(t1) & set(t2)
    locality = all(t1[bc] == t2[bc] for bc in shared_runs)

    return CompositionVerdict(
        antecedent,
        consequent,
        locality,
        (not antecedent.holds) or consequent.holds,
    )
