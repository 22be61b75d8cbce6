"""Social choice functions: pluggable outcome rules over reported profiles.

Each rule is a deterministic, stateless map from (instance, reports) to a
point in [0, 1] and may only look at participating voters' reported peaks
and reported invitations. All rules return grid points whenever their
parameters lie on the grid.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Mapping

from .model import (
    ConfigurationError,
    Instance,
    InstanceError,
    ReportedType,
    VoterId,
    ZERO,
    ONE,
    parse_rational,
    participating_voters,
    reported_depths,
)


def weighted_median(values: Iterable[tuple[Fraction, int]]) -> Fraction:
    """The ceil(m/2)-th smallest element of the expanded multiset.

    Each (value, weight) pair stands for ``weight`` copies of ``value``;
    m is the total weight. Weights must be positive integers.
    """
    items = sorted(values)
    if not items:
        raise InstanceError("weighted median of an empty multiset")
    total = 0
    for value, weight in items:
        if weight <= 0:
            raise ValueError(f"nonpositive weight {weight} for value {value}")
        total += weight
    rank = (total + 1) // 2
    seen = 0
    for value, weight in items:
        seen += weight
        if seen >= rank:
            return value
    raise AssertionError("unreachable: rank exceeds total weight")


def gmvs_evaluate(
    alpha: Callable[[frozenset[VoterId]], Fraction],
    peaks: Mapping[VoterId, Fraction],
) -> Fraction:
    """Max over subsets S of the voters of min(peaks in S, alpha(S)).

    ``alpha`` must be defined for every subset of ``peaks``' keys and is
    expected to be monotone with alpha(empty)=0 and alpha(all)=1; brute
    force over all 2^n subsets, fine for the small n used here.
    """
    voters = sorted(peaks)
    best = None
    for mask in range(1 << len(voters)):
        subset = frozenset(voters[b] for b in range(len(voters)) if mask >> b & 1)
        bound = alpha(subset)
        value = min([peaks[v] for v in subset] + [bound]) if subset else bound
        if best is None or value > best:
            best = value
    assert best is not None
    return best


@dataclass(frozen=True)
class GmvsParameters:
    """Threshold parameters, stored per size (anonymous) or per subset.

    ``anonymous[n]`` is a nondecreasing tuple of n+1 values indexed by |S|
    with first 0 and last 1. ``by_subset[N][S]`` gives the threshold for an
    explicit participating set N and subset S.
    """

    anonymous: Mapping[int, tuple[Fraction, ...]] | None = None
    by_subset: Mapping[frozenset[VoterId], Mapping[frozenset[VoterId], Fraction]] | None = None

    def __post_init__(self) -> None:
        if (self.anonymous is None) == (self.by_subset is None):
            raise ConfigurationError("exactly one of anonymous/by_subset must be given")
        if self.anonymous is not None:
            for n, row in self.anonymous.items():
                if len(row) != n + 1:
                    raise ConfigurationError(f"size-{n} parameters need {n + 1} values, got {len(row)}")
                if row[0] != ZERO or row[-1] != ONE:
                    raise ConfigurationError(f"size-{n} parameters must start at 0 and end at 1")
                if any(row[i] > row[i + 1] for i in range(n)):
                    raise ConfigurationError(f"size-{n} parameters are not monotone")
                if any(not ZERO <= v <= ONE for v in row):
                    raise ConfigurationError(f"size-{n} parameters leave [0, 1]")
        else:
            assert self.by_subset is not None
            for group, table in self.by_subset.items():
                if table.get(frozenset()) != ZERO or table.get(group) != ONE:
                    raise ConfigurationError(f"subset table for {sorted(group)} must map empty->0 and full->1")
                for s, value in table.items():
                    if not s <= group:
                        raise ConfigurationError(f"subset {sorted(s)} not within {sorted(group)}")
                    if not ZERO <= value <= ONE:
                        raise ConfigurationError("subset parameter leaves [0, 1]")
                for s, vs in table.items():
                    for t, vt in table.items():
                        if s < t and vs > vt:
                            raise ConfigurationError(
                                f"parameters not monotone: alpha({sorted(s)}) > alpha({sorted(t)})"
                            )

    def alpha_for(self, group: frozenset[VoterId]) -> Callable[[frozenset[VoterId]], Fraction]:
        if self.anonymous is not None:
            row = self.anonymous.get(len(group))
            if row is None:
                raise ConfigurationError(f"no parameters for participating sets of size {len(group)}")
            return lambda subset: row[len(subset)]
        assert self.by_subset is not None
        table = self.by_subset.get(group)
        if table is None:
            raise ConfigurationError(f"no parameters for participating set {sorted(group)}")

        def lookup(subset: frozenset[VoterId]) -> Fraction:
            try:
                return table[subset]
            except KeyError:
                raise ConfigurationError(f"missing parameter for subset {sorted(subset)}") from None

        return lookup


class SocialChoiceFunction:
    """Deterministic outcome rule; subclasses implement ``outcome``."""

    name: str = "scf"

    def outcome(self, instance: Instance, reports: Mapping[VoterId, ReportedType]) -> Fraction:
        raise NotImplementedError

    def weights(self, instance: Instance, reports: Mapping[VoterId, ReportedType]) -> dict[VoterId, int] | None:
        """Per-voter vote weights, for rules that have them (else None)."""
        return None


class FixedOutcome(SocialChoiceFunction):
    """Always returns the same point; a negative control for efficiency and ontoness."""

    def __init__(self, value: Fraction) -> None:
        if not ZERO <= value <= ONE:
            raise ConfigurationError(f"fixed outcome {value} outside [0, 1]")
        self.value = value
        self.name = f"fixed:{value.numerator}/{value.denominator}"

    def outcome(self, instance: Instance, reports: Mapping[VoterId, ReportedType]) -> Fraction:
        return self.value


class DirectChildrenMedian(SocialChoiceFunction):
    """Median of the moderator's direct children's reported peaks.

    Deeper voters' reports are ignored entirely. Optional phantom values
    (one fewer than the number of direct children) generalize the rule to
    any anonymous threshold scheme on the direct children; the default is
    the plain median. Even cardinalities take the ceil(m/2)-th smallest.
    """

    name = "direct-median"

    def __init__(self, phantoms: tuple[Fraction, ...] | None = None) -> None:
        self.phantoms = phantoms
        if phantoms is not None:
            if any(not ZERO <= p <= ONE for p in phantoms):
                raise ConfigurationError("phantom values must lie in [0, 1]")
            self.name = "direct-median[{}]".format(
                ",".join(f"{p.numerator}/{p.denominator}" for p in phantoms)
            )

    def outcome(self, instance: Instance, reports: Mapping[VoterId, ReportedType]) -> Fraction:
        direct = sorted(instance.graph.moderator_children)
        entries = [(reports[v].peak, 1) for v in direct]
        if self.phantoms is not None:
            if len(self.phantoms) != len(direct) - 1:
                raise ConfigurationError(
                    f"{len(direct)} direct children need {len(direct) - 1} phantoms, got {len(self.phantoms)}"
                )
            entries.extend((p, 1) for p in self.phantoms)
        return weighted_median(entries)

    def weights(self, instance: Instance, reports: Mapping[VoterId, ReportedType]) -> dict[VoterId, int]:
        participating = participating_voters(instance.graph, reports, validate=False)
        return {v: 1 if v in instance.graph.moderator_children else 0 for v in sorted(participating)}


class DepthWeightedMedian(SocialChoiceFunction):
    """Weighted median where closeness to the moderator buys weight.

    A depth-1 voter weighs one more than the number of children it invites,
    each depth-2 voter weighs 1, and deeper voters weigh 0. Inviting a
    child therefore raises the inviter's weight by exactly the child's own
    weight, which keeps full invitation a dominant strategy while letting
    depth-2 voters matter.
    """

    name = "depth-weighted-median"

    def weights(self, instance: Instance, reports: Mapping[VoterId, ReportedType]) -> dict[VoterId, int]:
        depths = reported_depths(instance.graph, reports, validate=False)
        out: dict[VoterId, int] = {}
        for v in sorted(depths):
            d = depths[v]
            if d == 1:
                out[v] = len(reports[v].invited) + 1
            elif d == 2:
                out[v] = 1
            else:
                out[v] = 0
        return out

    def outcome(self, instance: Instance, reports: Mapping[VoterId, ReportedType]) -> Fraction:
        entries = [
            (reports[v].peak, w)
            for v, w in self.weights(instance, reports).items()
            if w > 0
        ]
        return weighted_median(entries)


class ParticipantMedian(SocialChoiceFunction):
    """Unweighted median over every participating peak.

    Deliberately manipulable: excluding a subtree changes the electorate,
    so this rule serves as a negative control for the incentive checkers.
    """

    name = "participant-median"

    def outcome(self, instance: Instance, reports: Mapping[VoterId, ReportedType]) -> Fraction:
        participating = participating_voters(instance.graph, reports, validate=False)
        return weighted_median([(reports[v].peak, 1) for v in sorted(participating)])

    def weights(self, instance: Instance, reports: Mapping[VoterId, ReportedType]) -> dict[VoterId, int]:
        participating = participating_voters(instance.graph, reports, validate=False)
        return {v: 1 for v in sorted(participating)}


class Gmvs(SocialChoiceFunction):
    """Threshold (max-min) scheme over the participating voters' peaks."""

    def __init__(self, parameters: GmvsParameters, name: str = "gmvs") -> None:
        self.parameters = parameters
        self.name = name

    def outcome(self, instance: Instance, reports: Mapping[VoterId, ReportedType]) -> Fraction:
        participating = participating_voters(instance.graph, reports, validate=False)
        peaks = {v: reports[v].peak for v in participating}
        return gmvs_evaluate(self.parameters.alpha_for(frozenset(participating)), peaks)


def _parse_gmvs_file(path: Path) -> GmvsParameters:
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read gmvs parameters from {path}: {exc}") from exc
    if "anonymous" in data:
        anonymous = {
            int(n): tuple(parse_rational(v) for v in row) for n, row in data["anonymous"].items()
        }
        return GmvsParameters(anonymous=anonymous)
    if "by_subset" in data:
        by_subset: dict[frozenset[VoterId], dict[frozenset[VoterId], Fraction]] = {}
        for entry in data["by_subset"]:
            group = frozenset(entry["participants"])
            table = {
                frozenset(item["subset"]): parse_rational(item["value"]) for item in entry["alpha"]
            }
            by_subset[group] = table
        return GmvsParameters(by_subset=by_subset)
    raise ConfigurationError(f"{path}: expected an 'anonymous' or 'by_subset' section")


BUILTIN_SCF_NAMES = ("direct-median", "depth-weighted-median", "participant-median")


def parse_scf(spec: str) -> SocialChoiceFunction:
    """Build a rule from its CLI name.

    Known forms: ``fixed:<num/den>``, ``direct-median``,
    ``depth-weighted-median``, ``participant-median``, ``gmvs:<params.json>``.
    """
    if spec == "direct-median":
        return DirectChildrenMedian()
    if spec == "depth-weighted-median":
        return DepthWeightedMedian()
    if spec == "participant-median":
        return ParticipantMedian()
    if spec.startswith("fixed:"):
        try:
            value = parse_rational(spec[len("fixed:"):])
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc
        return FixedOutcome(value)
    if spec.startswith("gmvs:"):
        return Gmvs(_parse_gmvs_file(Path(spec[len("gmvs:"):])))
    raise ConfigurationError(
        f"unknown scf {spec!r}; expected fixed:<q>, direct-median, "
        "depth-weighted-median, participant-median, or gmvs:<file>"
    )
