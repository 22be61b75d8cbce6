"""Complete search for outcome rules satisfying a property set on one instance.

The unknown rule is a finite table: one variable per distinct observable
situation (participating set plus reported peaks and invitations), with the
grid as domain. Efficiency becomes a unary hull restriction, anonymity
becomes equalities between peak-permuted situations (merged up front),
incentive compatibility becomes binary weak-preference constraints between
truthful and deviated situations for every hypothetical true peak, and
relevance becomes a lazy at-least-one-pair-differs disjunction. Backtracking
with arc consistency then decides satisfiability completely: a Sat verdict
comes with a full table, an Unsat verdict means exhaustive refutation, and a
timeout is reported as inconclusive, never as Unsat.
"""

from __future__ import annotations

import random
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .enumeration import enumerate_profiles, others_assignments, voter_participates
from .model import (
    BudgetExceededError,
    ConfigurationError,
    Instance,
    PreferenceModel,
    PreferenceVerdict,
    ReportedType,
    SituationKey,
    TreeChoiceError,
    TrueType,
    VoterId,
    compare,
    format_rational,
    report_space,
    situation_key,
)
from .properties import CheckReport, run_check
from .scf import SocialChoiceFunction

_SIMPLE_TOKENS = ("SP", "SP-D", "PE", "AN", "AN-S", "AN-D", "AN-SD")
_ANON_VARIANTS = {"AN": "all", "AN-S": "structure", "AN-D": "depth", "AN-SD": "structure-depth"}


class InconclusiveError(TreeChoiceError):
    """Search hit its time budget; carries statistics, never an Unsat claim."""

    def __init__(self, stats: dict) -> None:
        super().__init__(f"search inconclusive after {stats.get('nodes_explored', 0)} nodes")
        self.stats = stats


def normalize_properties(properties: Iterable[str]) -> tuple[str, ...]:
    """Validate and canonically order property tokens."""
    seen: set[str] = set()
    vr: set[int] = set()
    for raw in properties:
        token = raw.strip().upper()
        if token in _SIMPLE_TOKENS:
            seen.add(token)
        elif token.startswith("VR-") and token[3:].isdigit():
            vr.add(int(token[3:]))
        else:
            raise ConfigurationError(
                f"unknown property {raw!r}; supported: {', '.join(_SIMPLE_TOKENS)}, VR-<d>"
            )
    ordered = [t for t in _SIMPLE_TOKENS if t in seen]
    ordered.extend(f"VR-{d}" for d in sorted(vr))
    return tuple(ordered)


@dataclass(frozen=True)
class CspOptions:
    variable_budget: int = 20_000
    profile_budget: int = 2_000_000
    depth1_hull: bool = False
    robust_ambiguous_violation: bool = True


@dataclass(frozen=True)
class VrConstraint:
    """At least one group must contain two variables with different values."""

    voter: VoterId
    groups: tuple[tuple[int, ...], ...]


@dataclass
class Csp:
    instance: Instance
    properties: tuple[str, ...]
    options: CspOptions
    keys: tuple[SituationKey, ...]
    domains: list[tuple[Fraction, ...]]
    equalities: tuple[tuple[int, int], ...]
    sp_constraints: tuple[tuple[int, int, Fraction], ...]
    vr_constraints: tuple[VrConstraint, ...]

    @property
    def constraint_counts(self) -> dict[str, int]:
        return {
            "pareto_hull": len(self.keys) if "PE" in self.properties else 0,
            "depth1_hull": len(self.keys) if self.options.depth1_hull else 0,
            "anon_equality": len(self.equalities),
            "sp_preference": len(self.sp_constraints),
            "vr_disjunction": len(self.vr_constraints),
        }

    def to_json(self) -> dict:
        sizes: dict[int, int] = {}
        for dom in self.domains:
            sizes[len(dom)] = sizes.get(len(dom), 0) + 1
        return {
            "schema_version": 1,
            "variables": len(self.keys),
            "grid": [format_rational(q) for q in self.instance.grid],
            "properties": list(self.properties),
            "domain_sizes": {str(k): v for k, v in sorted(sizes.items())},
            "constraints": self.constraint_counts,
        }


@dataclass
class CspResult:
    verdict: str  # "sat" | "unsat"
    model: dict[SituationKey, Fraction] | None
    nodes_explored: int
    stats: dict
    wall_time_s: float

    @property
    def sat(self) -> bool:
        return self.verdict == "sat"

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "verdict": self.verdict,
            "model": None if self.model is None else model_to_json(self.model),
            "nodes_explored": self.nodes_explored,
            "stats": self.stats,
            "wall_time_s": self.wall_time_s,
        }


def model_to_json(model: Mapping[SituationKey, Fraction]) -> list[dict]:
    out = []
    for key in sorted(model):
        out.append(
            {
                "situation": [
                    {"voter": v, "peak": format_rational(p), "invited": list(inv)}
                    for v, p, inv in key
                ],
                "outcome": format_rational(model[key]),
            }
        )
    return out


def collect_situations(instance: Instance, options: CspOptions | None = None) -> tuple[SituationKey, ...]:
    """Every observable situation reachable from some legal report profile."""
    options = options or CspOptions()
    graph = instance.graph
    keys: set[SituationKey] = set()
    for profile in enumerate_profiles(instance, budget=options.profile_budget):
        keys.add(situation_key(graph, profile))
        if len(keys) > options.variable_budget:
            raise BudgetExceededError(len(keys), options.variable_budget, what="CSP variable")
    return tuple(sorted(keys))


def _key_reports(key: SituationKey) -> dict[VoterId, ReportedType]:
    return {v: ReportedType(p, frozenset(inv)) for v, p, inv in key}


def _key_depths(instance: Instance, key: SituationKey) -> dict[VoterId, int]:
    reports = _key_reports(key)
    depths: dict[VoterId, int] = {}
    frontier = sorted(v for v in reports if v in instance.graph.moderator_children)
    level = 1
    while frontier:
        nxt: list[VoterId] = []
        for v in frontier:
            depths[v] = level
            nxt.extend(sorted(c for c in reports[v].invited if c not in depths))
        frontier = nxt
        level += 1
    return depths


def _key_classes(instance: Instance, key: SituationKey, variant: str) -> list[list[int]]:
    """Positions in the key grouped by the anonymity class of their voter."""
    depths = _key_depths(instance, key)
    groups: dict[tuple, list[int]] = {}
    for pos, (v, _, inv) in enumerate(key):
        if variant == "all":
            gkey: tuple = ("all",)
        elif variant == "structure":
            gkey = ("structure", len(inv))
        elif variant == "depth":
            gkey = ("depth", depths[v])
        else:
            gkey = ("structure-depth", len(inv), depths[v])
        groups.setdefault(gkey, []).append(pos)
    return [positions for _, positions in sorted(groups.items())]


def _swap_peaks(key: SituationKey, a: int, b: int) -> SituationKey:
    entries = list(key)
    va, pa, ia = entries[a]
    vb, pb, ib = entries[b]
    entries[a] = (va, pb, ia)
    entries[b] = (vb, pa, ib)
    return tuple(entries)


def encode(instance: Instance, properties: Iterable[str], options: CspOptions | None = None) -> Csp:
    """Translate a property set into a finite CSP over situation variables."""
    options = options or CspOptions()
    props = normalize_properties(properties)
    graph = instance.graph
    grid = instance.grid

    keys = collect_situations(instance, options)
    index = {key: i for i, key in enumerate(keys)}

    domains: list[tuple[Fraction, ...]] = []
    for key in keys:
        dom = grid
        if "PE" in props:
            peaks = [p for _, p, _ in key]
            lo, hi = min(peaks), max(peaks)
            dom = tuple(q for q in dom if lo <= q <= hi)
        if options.depth1_hull:
            d1 = [p for v, p, _ in key if v in graph.moderator_children]
            lo1, hi1 = min(d1), max(d1)
            dom = tuple(q for q in dom if lo1 <= q <= hi1)
        domains.append(tuple(dom))

    equalities: set[tuple[int, int]] = set()
    for token in props:
        variant = _ANON_VARIANTS.get(token)
        if variant is None:
            continue
        for key in keys:
            for positions in _key_classes(instance, key, variant):
                if len(positions) < 2:
                    continue
                base = index[key]
                for ai in range(len(positions)):
                    for bi in range(ai + 1, len(positions)):
                        swapped = _swap_peaks(key, positions[ai], positions[bi])
                        other = index[swapped]
                        if other != base:
                            equalities.add((min(base, other), max(base, other)))

    sp_constraints: set[tuple[int, int, Fraction]] = set()
    sp_mode = "full" if "SP" in props else ("diffusion" if "SP-D" in props else None)
    if sp_mode is not None:
        for voter in graph.voters:
            children = graph.true_children(voter)
            full_space = report_space(TrueType(grid[0], children), grid)
            for others in others_assignments(instance, voter, budget=None):
                if not voter_participates(instance, voter, others):
                    continue
                profile = dict(others)
                rep_var: dict[ReportedType, int] = {}
                for rep in full_space:
                    profile[voter] = rep
                    rep_var[rep] = index[situation_key(graph, profile)]
                for peak in grid:
                    truthful = ReportedType(peak, children)
                    var_t = rep_var[truthful]
                    if sp_mode == "full":
                        deviations: Sequence[ReportedType] = full_space
                    else:
                        deviations = [
                            rep for rep in full_space if rep.peak == peak
                        ]
                    for dev in deviations:
                        var_d = rep_var[dev]
                        if var_d != var_t:
                            sp_constraints.add((var_t, var_d, peak))

    vr_scope: set[VoterId] = set()
    for token in props:
        if token.startswith("VR-"):
            d = int(token[3:])
            vr_scope.update(v for v in graph.voters if 1 <= graph.true_depth(v) <= d)
    vr_constraints: list[VrConstraint] = []
    for voter in sorted(vr_scope):
        space = instance.report_space(voter)
        groups: list[tuple[int, ...]] = []
        seen_groups: set[tuple[int, ...]] = set()
        for others in others_assignments(instance, voter, budget=None):
            if not voter_participates(instance, voter, others):
                continue
            profile = dict(others)
            vars_here: set[int] = set()
            for rep in space:
                profile[voter] = rep
                vars_here.add(index[situation_key(graph, profile)])
            if len(vars_here) >= 2:
                group = tuple(sorted(vars_here))
                if group not in seen_groups:
                    seen_groups.add(group)
                    groups.append(group)
        vr_constraints.append(VrConstraint(voter, tuple(groups)))

    return Csp(
        instance=instance,
        properties=props,
        options=options,
        keys=keys,
        domains=domains,
        equalities=tuple(sorted(equalities)),
        sp_constraints=tuple(sorted(sp_constraints)),
        vr_constraints=tuple(vr_constraints),
    )


def solve(csp: Csp, *, order_seed: int | None = None, timeout_s: float | None = None) -> CspResult:
    """Complete backtracking over the merged situation variables.

    Anonymity equalities are merged by union-find, unary hulls are already
    in the domains, arc consistency runs on the preference constraints, and
    the relevance disjunctions are checked lazily on complete assignments.
    Variable order is most-constrained-first; value order is ascending grid.
    ``order_seed`` shuffles the tie-break and value orders (the verdict must
    not depend on it); ``timeout_s`` aborts with InconclusiveError.
    """
    t0 = time.monotonic()
    n = len(csp.keys)
    model_kind = csp.instance.preference_model
    ambiguous_violates = csp.options.robust_ambiguous_violation

    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in csp.equalities:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    rep_of = [find(i) for i in range(n)]
    dom: dict[int, set[Fraction]] = {}
    for i in range(n):
        r = rep_of[i]
        if r in dom:
            dom[r] &= set(csp.domains[i])
        else:
            dom[r] = set(csp.domains[i])

    sp = sorted(
        {
            (rep_of[t], rep_of[d], p)
            for t, d, p in csp.sp_constraints
            if rep_of[t] != rep_of[d]
        }
    )
    vr: list[tuple[VoterId, tuple[tuple[int, ...], ...]]] = []
    vr_collapsed: VoterId | None = None
    for c in csp.vr_constraints:
        groups: list[tuple[int, ...]] = []
        seen: set[tuple[int, ...]] = set()
        for g in c.groups:
            rg = tuple(sorted({rep_of[v] for v in g}))
            if len(rg) >= 2 and rg not in seen:
                seen.add(rg)
                groups.append(rg)
        if not groups:
            vr_collapsed = c.voter
        vr.append((c.voter, tuple(groups)))

    stats: dict = {
        "variables": n,
        "merged_variables": len(dom),
        "sp_constraints": len(sp),
        "anon_equalities": len(csp.equalities),
        "vr_constraints": len(vr),
        "ac3_prunes": 0,
        "order_seed": order_seed,
    }

    def finish(verdict: str, model: dict[SituationKey, Fraction] | None, nodes: int) -> CspResult:
        stats["nodes_explored"] = nodes
        return CspResult(verdict, model, nodes, dict(stats), time.monotonic() - t0)

    if any(not d for d in dom.values()):
        stats["refuted_by"] = "empty-domain"
        return finish("unsat", None, 0)
    if vr_collapsed is not None:
        # every deviation pair of this voter is forced equal by the equalities
        stats["refuted_by"] = f"relevance-collapsed:{vr_collapsed}"
        return finish("unsat", None, 0)

    def ok(peak: Fraction, x_truth: Fraction, x_dev: Fraction) -> bool:
        verdict = compare(peak, x_truth, x_dev, model_kind)
        if verdict is PreferenceVerdict.WORSE:
            return False
        if (
            verdict is PreferenceVerdict.AMBIGUOUS
            and model_kind is PreferenceModel.ROBUST_SINGLE_PEAKED
            and ambiguous_violates
        ):
            return False
        return True

    cons_by_var: dict[int, list[int]] = {}
    for ci, (t, d, p) in enumerate(sp):
        cons_by_var.setdefault(t, []).append(ci)
        cons_by_var.setdefault(d, []).append(ci)

    # arc consistency to a fixpoint
    queue = list(range(len(sp)))
    queued = set(queue)
    while queue:
        ci = queue.pop()
        queued.discard(ci)
        t, d, p = sp[ci]
        keep_t = {x for x in dom[t] if any(ok(p, x, y) for y in dom[d])}
        keep_d = {y for y in dom[d] if any(ok(p, x, y) for x in dom[t])}
        for var, keep in ((t, keep_t), (d, keep_d)):
            if len(keep) < len(dom[var]):
                stats["ac3_prunes"] += len(dom[var]) - len(keep)
                dom[var] = keep
                if not keep:
                    stats["refuted_by"] = "arc-consistency"
                    return finish("unsat", None, 0)
                for other in cons_by_var.get(var, ()):
                    if other not in queued:
                        queued.add(other)
                        queue.append(other)

    reps = sorted(dom)
    value_rank = {q: i for i, q in enumerate(csp.instance.grid)}
    tie_rank = {r: i for i, r in enumerate(reps)}
    if order_seed is not None:
        rng = random.Random(order_seed)
        shuffled = reps[:]
        rng.shuffle(shuffled)
        tie_rank = {r: i for i, r in enumerate(shuffled)}
        values = list(csp.instance.grid)
        rng.shuffle(values)
        value_rank = {q: i for i, q in enumerate(values)}

    assignment: dict[int, Fraction] = {}
    nodes = 0

    def vr_satisfied() -> bool:
        for _, groups in vr:
            if not any(len({assignment[v] for v in g}) >= 2 for g in groups):
                return False
        return True

    def propagate(var: int, val: Fraction, trail: list[tuple[int, set[Fraction]]]) -> bool:
        for ci in cons_by_var.get(var, ()):
            t, d, p = sp[ci]
            if t == var and d not in assignment:
                keep = {y for y in dom[d] if ok(p, val, y)}
            elif d == var and t not in assignment:
                keep = {x for x in dom[t] if ok(p, x, val)}
            else:
                other = d if t == var else t
                if other in assignment:
                    pair = (val, assignment[other]) if t == var else (assignment[other], val)
                    if not ok(p, *pair):
                        return False
                continue
            other = d if t == var else t
            if len(keep) < len(dom[other]):
                trail.append((other, dom[other]))
                dom[other] = keep
                if not keep:
                    return False
        return True

    sys.setrecursionlimit(max(sys.getrecursionlimit(), 2 * len(reps) + 100))

    def search() -> bool:
        nonlocal nodes
        if timeout_s is not None and time.monotonic() - t0 > timeout_s:
            stats["nodes_explored"] = nodes
            raise InconclusiveError(dict(stats))
        pending = [r for r in reps if r not in assignment]
        if not pending:
            return vr_satisfied()
        var = min(pending, key=lambda r: (len(dom[r]), tie_rank[r]))
        for val in sorted(dom[var], key=lambda q: value_rank[q]):
            nodes += 1
            assignment[var] = val
            trail: list[tuple[int, set[Fraction]]] = [(var, dom[var])]
            dom[var] = {val}
            if propagate(var, val, trail) and search():
                return True
            for v, saved in reversed(trail):
                dom[v] = saved
            del assignment[var]
        return False

    if search():
        model = {key: assignment[rep_of[i]] for i, key in enumerate(csp.keys)}
        return finish("sat", model, nodes)
    return finish("unsat", None, nodes)


class TabulatedScf(SocialChoiceFunction):
    """An outcome rule given extensionally, as a situation-to-outcome table."""

    name = "tabulated"

    def __init__(self, table: Mapping[SituationKey, Fraction]) -> None:
        self.table = dict(table)

    def outcome(self, instance: Instance, reports: Mapping[VoterId, ReportedType]) -> Fraction:
        key = situation_key(instance.graph, reports)
        try:
            return self.table[key]
        except KeyError:
            raise ConfigurationError("table has no entry for a reachable situation") from None


def tabulate_scf(
    instance: Instance,
    scf: SocialChoiceFunction,
    *,
    options: CspOptions | None = None,
) -> dict[SituationKey, Fraction]:
    """Restrict a functional rule to this instance as an explicit table."""
    options = options or CspOptions()
    graph = instance.graph
    table: dict[SituationKey, Fraction] = {}
    for profile in enumerate_profiles(instance, budget=options.profile_budget):
        key = situation_key(graph, profile)
        if key not in table:
            table[key] = scf.outcome(instance, profile)
    return table


def verify_model(
    instance: Instance,
    model: Mapping[SituationKey, Fraction],
    properties: Iterable[str],
    *,
    budget: int | None = None,
) -> list[CheckReport]:
    """Replay a table through the property checkers; Sat models must pass all."""
    props = normalize_properties(properties)
    reachable = collect_situations(instance)
    missing = [key for key in reachable if key not in model]
    if missing:
        raise ConfigurationError(
            f"incomplete table: {len(missing)} reachable situations unassigned"
        )
    scf = TabulatedScf(model)
    kwargs = {} if budget is None else {"budget": budget}
    return [run_check(scf, instance, token, **kwargs) for token in props]
