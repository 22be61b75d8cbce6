"""Exact domain model: voters, invitation trees, reports, preference comparison.

The outcome space is the unit interval. Every peak, parameter, and outcome is
a ``fractions.Fraction``, so all comparisons in the core are exact; no floats
appear anywhere. All values are immutable after construction and safe to share
across parallel workers.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Mapping

VoterId = str

ZERO = Fraction(0)
ONE = Fraction(1)


class TreeChoiceError(Exception):
    """Base class for all errors raised by this package."""


class StructuralError(TreeChoiceError):
    """Malformed invitation graph or report map."""


class InstanceError(TreeChoiceError):
    """Invalid instance: bad grid, off-grid peak, or no direct children."""


class NotParticipatingError(TreeChoiceError):
    """A depth or class query named a voter that is unreachable under the reports."""


class ConfigurationError(TreeChoiceError):
    """An outcome rule was configured inconsistently with its input."""


class BudgetExceededError(TreeChoiceError):
    """An enumeration or search would exceed its configured size budget."""

    def __init__(self, projected: int, budget: int, what: str = "enumeration") -> None:
        super().__init__(f"projected {what} size {projected} exceeds budget {budget}")
        self.projected = projected
        self.budget = budget


_RATIONAL_RE = re.compile(r"^(-?\d+)\s*/\s*(\d+)$")


def parse_rational(text: str) -> Fraction:
    """Parse a ``num/den`` string with a positive denominator."""
    match = _RATIONAL_RE.match(text.strip())
    if match is None:
        raise ValueError(f"expected a 'num/den' rational, got {text!r}")
    num, den = int(match.group(1)), int(match.group(2))
    if den == 0:
        raise ValueError(f"zero denominator in {text!r}")
    return Fraction(num, den)


def format_rational(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


class PreferenceModel(Enum):
    """How comparisons across opposite sides of a peak are resolved.

    SYMMETRIC_DISTANCE scores an outcome by its distance to the peak.
    ROBUST_SINGLE_PEAKED only commits to verdicts that hold for every
    single-peaked ordering with that peak; opposite-side comparisons of
    two non-peak outcomes are reported as AMBIGUOUS.
    """

    SYMMETRIC_DISTANCE = "symmetric"
    ROBUST_SINGLE_PEAKED = "robust"


class PreferenceVerdict(Enum):
    BETTER = "Better"
    WORSE = "Worse"
    INDIFFERENT = "Indifferent"
    AMBIGUOUS = "Ambiguous"


def compare(
    peak: Fraction,
    a: Fraction,
    b: Fraction,
    model: PreferenceModel = PreferenceModel.SYMMETRIC_DISTANCE,
) -> PreferenceVerdict:
    """How a voter with ideal point ``peak`` ranks outcome ``a`` against ``b``.

    AMBIGUOUS can only occur under ROBUST_SINGLE_PEAKED, when the two
    outcomes are distinct, lie on opposite sides of the peak, and neither
    equals the peak.
    """
    for name, value in (("peak", peak), ("a", a), ("b", b)):
        if not ZERO <= value <= ONE:
            raise ValueError(f"{name}={value} outside [0, 1]")
    if a == b:
        return PreferenceVerdict.INDIFFERENT
    if model is PreferenceModel.SYMMETRIC_DISTANCE:
        da, db = abs(a - peak), abs(b - peak)
        if da < db:
            return PreferenceVerdict.BETTER
        if da > db:
            return PreferenceVerdict.WORSE
        return PreferenceVerdict.INDIFFERENT
    if a == peak:
        return PreferenceVerdict.BETTER
    if b == peak:
        return PreferenceVerdict.WORSE
    if (a < peak) == (b < peak):
        # same side of the peak: closer is better under every completion
        return PreferenceVerdict.BETTER if abs(a - peak) < abs(b - peak) else PreferenceVerdict.WORSE
    return PreferenceVerdict.AMBIGUOUS


@dataclass(frozen=True)
class TrueType:
    """A voter's private situation: ideal point plus the children it could invite."""

    peak: Fraction
    children: frozenset[VoterId]


@dataclass(frozen=True)
class ReportedType:
    """What a voter submits: a claimed peak and the subset of children it invites."""

    peak: Fraction
    invited: frozenset[VoterId]


@dataclass(frozen=True, eq=True)
class InvitationGraph:
    """Rooted invitation tree over the moderator and the potential voters.

    The moderator invites ``moderator_children`` (its direct children);
    each voter ``v`` may invite the voters in ``children[v]``. The
    parent-to-child edges must form a tree rooted at the moderator that
    spans every voter: one parent each, everyone reachable.
    """

    moderator_children: frozenset[VoterId]
    children: Mapping[VoterId, frozenset[VoterId]]
    voters: tuple[VoterId, ...] = field(init=False, repr=False, compare=False)
    _parent: Mapping[VoterId, VoterId | None] = field(init=False, repr=False, compare=False)
    _depth: Mapping[VoterId, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        direct = frozenset(self.moderator_children)
        raw = {v: frozenset(kids) for v, kids in dict(self.children).items()}
        all_voters = set(direct) | set(raw)
        for kids in raw.values():
            all_voters |= kids
        children = {v: raw.get(v, frozenset()) for v in all_voters}

        parent: dict[VoterId, VoterId | None] = {}
        for v in direct:
            parent[v] = None
        for v, kids in children.items():
            for child in kids:
                if child == v:
                    raise StructuralError(f"voter {child!r} invites itself")
                if child in parent:
                    raise StructuralError(f"voter {child!r} has more than one parent")
                parent[child] = v
        orphans = all_voters - set(parent)
        if orphans:
            raise StructuralError(f"voters with no parent: {sorted(orphans)}")

        depth: dict[VoterId, int] = {}
        frontier = sorted(direct)
        level = 1
        while frontier:
            nxt: list[VoterId] = []
            for v in frontier:
                depth[v] = level
                nxt.extend(sorted(children[v]))
            frontier = nxt
            level += 1
        unreachable = all_voters - set(depth)
        if unreachable:
            raise StructuralError(f"voters unreachable from the moderator: {sorted(unreachable)}")

        object.__setattr__(self, "moderator_children", direct)
        object.__setattr__(self, "children", MappingProxyType(children))
        object.__setattr__(self, "voters", tuple(sorted(all_voters)))
        object.__setattr__(self, "_parent", MappingProxyType(parent))
        object.__setattr__(self, "_depth", MappingProxyType(depth))

    def true_children(self, voter: VoterId) -> frozenset[VoterId]:
        return self.children[voter]

    def parent_of(self, voter: VoterId) -> VoterId | None:
        """Parent voter, or None when the parent is the moderator."""
        return self._parent[voter]

    def true_depth(self, voter: VoterId) -> int:
        """Distance from the moderator when every voter invites fully."""
        return self._depth[voter]

    @property
    def max_depth(self) -> int:
        return max(self._depth.values(), default=0)


def _validate_reports(graph: InvitationGraph, reports: Mapping[VoterId, ReportedType]) -> None:
    for v in graph.voters:
        rep = reports.get(v)
        if rep is None:
            raise StructuralError(f"missing report for voter {v!r}")
        extra = rep.invited - graph.children[v]
        if extra:
            raise StructuralError(f"voter {v!r} invites non-children {sorted(extra)}")


def participating_voters(
    graph: InvitationGraph,
    reports: Mapping[VoterId, ReportedType],
    *,
    validate: bool = True,
) -> frozenset[VoterId]:
    """Voters reachable from the moderator along reported invitations.

    The moderator's direct children always participate; a deeper voter
    participates iff every ancestor on its path reports the next edge.
    """
    if validate:
        _validate_reports(graph, reports)
    reached = set(graph.moderator_children)
    frontier = list(graph.moderator_children)
    while frontier:
        v = frontier.pop()
        for child in reports[v].invited:
            if child not in reached:
                reached.add(child)
                frontier.append(child)
    return frozenset(reached)


def reported_depths(
    graph: InvitationGraph,
    reports: Mapping[VoterId, ReportedType],
    *,
    validate: bool = True,
) -> dict[VoterId, int]:
    """Depth of every participating voter under the reported invitations."""
    if validate:
        _validate_reports(graph, reports)
    depth: dict[VoterId, int] = {}
    frontier = sorted(graph.moderator_children)
    level = 1
    while frontier:
        nxt: list[VoterId] = []
        for v in frontier:
            depth[v] = level
            nxt.extend(sorted(c for c in reports[v].invited if c not in depth))
        frontier = nxt
        level += 1
    return depth


def depth(graph: InvitationGraph, reports: Mapping[VoterId, ReportedType], voter: VoterId) -> int:
    """Number of reported edges on the moderator-to-voter path."""
    depths = reported_depths(graph, reports)
    if voter not in depths:
        raise NotParticipatingError(f"voter {voter!r} does not participate under these reports")
    return depths[voter]


def n_d(graph: InvitationGraph, reports: Mapping[VoterId, ReportedType], d: int) -> frozenset[VoterId]:
    """Participating voters at reported distance ``d`` from the moderator."""
    depths = reported_depths(graph, reports)
    return frozenset(v for v, dv in depths.items() if dv == d)


def n_s(graph: InvitationGraph, reports: Mapping[VoterId, ReportedType], k: int) -> frozenset[VoterId]:
    """Participating voters whose report invites exactly ``k`` children."""
    participating = participating_voters(graph, reports)
    return frozenset(v for v in participating if len(reports[v].invited) == k)


def report_space(
    true_type: TrueType,
    grid: Iterable[Fraction],
    *,
    diffusion_only: bool = False,
) -> tuple[ReportedType, ...]:
    """All legal reports: any grid peak, any subset of the true children.

    With ``diffusion_only`` the claimed peak is pinned to the true peak and
    only the invited subset varies. Order is deterministic: peaks ascending,
    then invited subsets by ascending bitmask over the sorted children.
    """
    grid = tuple(grid)
    if true_type.peak not in grid:
        raise InstanceError(f"true peak {true_type.peak} is not on the grid")
    kids = sorted(true_type.children)
    peaks = (true_type.peak,) if diffusion_only else tuple(sorted(grid))
    out: list[ReportedType] = []
    for peak in peaks:
        for mask in range(1 << len(kids)):
            invited = frozenset(kids[b] for b in range(len(kids)) if mask >> b & 1)
            out.append(ReportedType(peak, invited))
    return tuple(out)


@dataclass(frozen=True, eq=True)
class Instance:
    """A finite, exactly checkable world: tree, true peaks, and a peak/outcome grid."""

    graph: InvitationGraph
    true_peaks: Mapping[VoterId, Fraction]
    grid: tuple[Fraction, ...]
    preference_model: PreferenceModel = PreferenceModel.SYMMETRIC_DISTANCE

    def __post_init__(self) -> None:
        grid = tuple(self.grid)
        if any(grid[i] >= grid[i + 1] for i in range(len(grid) - 1)):
            raise InstanceError("grid must be strictly increasing")
        if not grid or grid[0] != ZERO or grid[-1] != ONE:
            raise InstanceError("grid must contain 0 and 1")
        if not self.graph.moderator_children:
            raise InstanceError("degenerate instance: the moderator invites nobody")
        peaks = dict(self.true_peaks)
        missing = set(self.graph.voters) - set(peaks)
        if missing:
            raise InstanceError(f"missing true peaks for {sorted(missing)}")
        unknown = set(peaks) - set(self.graph.voters)
        if unknown:
            raise InstanceError(f"peaks for unknown voters {sorted(unknown)}")
        gridset = set(grid)
        for v, p in peaks.items():
            if p not in gridset:
                raise InstanceError(f"true peak of {v!r} ({p}) is not on the grid")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "true_peaks", MappingProxyType(peaks))

    def true_type(self, voter: VoterId) -> TrueType:
        return TrueType(self.true_peaks[voter], self.graph.true_children(voter))

    def truthful_report(self, voter: VoterId) -> ReportedType:
        """The honest report: true peak, every true child invited."""
        return ReportedType(self.true_peaks[voter], self.graph.true_children(voter))

    def truthful_reports(self) -> dict[VoterId, ReportedType]:
        return {v: self.truthful_report(v) for v in self.graph.voters}

    def report_space(self, voter: VoterId, *, diffusion_only: bool = False) -> tuple[ReportedType, ...]:
        return report_space(self.true_type(voter), self.grid, diffusion_only=diffusion_only)


SituationKey = tuple[tuple[VoterId, Fraction, tuple[VoterId, ...]], ...]


def situation_key(graph: InvitationGraph, reports: Mapping[VoterId, ReportedType]) -> SituationKey:
    """Canonical description of everything an outcome rule may observe.

    Two report profiles that differ only in non-participating voters map to
    the same key: the participating set plus each participant's reported
    peak and invited children.
    """
    participating = participating_voters(graph, reports, validate=False)
    return tuple(
        (v, reports[v].peak, tuple(sorted(reports[v].invited))) for v in sorted(participating)
    )
