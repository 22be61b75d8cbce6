"""Acceptance suite: one test per criterion, one printed pass/fail line each.

Run with ``pytest -s tests/test_acceptance.py -v`` to watch the lines appear;
the whole suite replays the bundled demo, sweeps the exhaustive checkers over
every instance with at most four voters and depth at most three on the
three-point grid, and reruns the complete-search refutations.
"""

from __future__ import annotations

import itertools
import random
import time
from fractions import Fraction

from treechoice import (
    AnonymityVariant,
    CspOptions,
    DepthWeightedMedian,
    DirectChildrenMedian,
    FixedOutcome,
    ParticipantMedian,
    ReportedType,
    check_anonymity,
    check_depth1_hull,
    check_pareto,
    check_sp,
    check_voter_relevance,
    encode,
    find_dominating_point,
    gmvs_evaluate,
    parse_rational,
    solve,
    verify_model,
)
from treechoice.enumeration import ProfileFilters, enumerate_profiles
from treechoice.fileio import (
    make_chain,
    make_random,
    make_two_children_one_grandchild,
    uniform_grid,
)
from treechoice.matrix import build_matrix
from treechoice.model import participating_voters
from conftest import make_deep_demo, tree_shapes, instances_for

F = Fraction


def _criterion(name: str, ok: bool, detail: str = "") -> None:
    line = f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" | {detail}"
    print(line)
    assert ok, line


def test_c01_demo_replay(fig2_instance):
    started = time.monotonic()
    dwm = DepthWeightedMedian()
    base = fig2_instance.truthful_reports()
    outcomes = []
    for invited in (frozenset(), frozenset(["u"]), frozenset(["u", "v"])):
        reports = dict(base)
        reports["i"] = ReportedType(F(3, 5), invited)
        outcomes.append(dwm.outcome(fig2_instance, reports))
    elapsed = time.monotonic() - started
    peak_i = F(3, 5)
    distances = [abs(o - peak_i) for o in outcomes]
    ok = (
        outcomes == [F(3, 10), F(3, 5), F(3, 5)]
        and distances[0] >= distances[1] >= distances[2]
        and elapsed < 1.0
    )
    _criterion(
        "C1 demo replay",
        ok,
        f"outcomes={['%s' % o for o in outcomes]} distances non-increasing, {elapsed:.3f}s",
    )


def test_c02_direct_median_guarantee_suite(small_family, fig2_instance):
    started = time.monotonic()
    dcm = DirectChildrenMedian()
    failures = []
    for inst in small_family + [fig2_instance]:
        reports = [
            check_sp(dcm, inst),
            check_pareto(dcm, inst),
            check_anonymity(dcm, inst, AnonymityVariant.BY_DEPTH),
            check_voter_relevance(dcm, inst, 1),
        ]
        for report in reports:
            if not report.passed:
                failures.append((inst, report.property))
    elapsed = time.monotonic() - started
    ok = not failures and elapsed < 300.0
    _criterion(
        "C2 direct-median SP/PE/AN-D/VR-1",
        ok,
        f"{len(small_family) + 1} instances, {len(failures)} counterexamples, {elapsed:.1f}s",
    )


def test_c03_depth_weighted_guarantee_suite(small_family, fig2_instance):
    # The weighted rule's relevance-2 guarantee needs at least two direct
    # children: with a single direct child its weight majorizes the rest, the
    # outcome always equals that child's reported peak, and the complete
    # search shows no rule at all can reach VR-2 there. The suite therefore
    # asserts VR-2 on every multi-direct-child instance, and asserts both the
    # honest no-witness failure and the impossibility cross-proof on the
    # single-child ones.
    started = time.monotonic()
    dwm = DepthWeightedMedian()
    failures = []
    vr2_failures = []
    for inst in small_family + [fig2_instance]:
        for report in (
            check_sp(dwm, inst),
            check_pareto(dwm, inst),
            check_anonymity(dwm, inst, AnonymityVariant.BY_STRUCTURE_DEPTH),
        ):
            if not report.passed:
                failures.append((inst, report.property))
        vr2 = check_voter_relevance(dwm, inst, 2)
        structurally_blocked = (
            len(inst.graph.moderator_children) == 1 and inst.graph.max_depth >= 2
        )
        if structurally_blocked:
            if vr2.passed or vr2.witness.get("note") != "no witness on this grid":
                failures.append((inst, "VR-2 expected structural failure"))
            else:
                vr2_failures.append(inst)
        elif not vr2.passed:
            failures.append((inst, "VR-2"))
    cross_proofs = 0
    for inst in vr2_failures[:3]:
        if solve(encode(inst, ["SP", "PE", "VR-2"])).verdict == "unsat":
            cross_proofs += 1
    elapsed = time.monotonic() - started
    ok = not failures and cross_proofs == min(3, len(vr2_failures)) and elapsed < 600.0
    _criterion(
        "C3 depth-weighted SP/PE/AN-SD/VR-2",
        ok,
        f"{len(small_family) + 1} instances, {len(failures)} counterexamples, "
        f"{len(vr2_failures)} single-child instances where VR-2 is impossible for every rule "
        f"({cross_proofs} search-verified), {elapsed:.1f}s",
    )


def test_c04_negative_claims(fig2_instance):
    dwm = DepthWeightedMedian()
    ad = check_anonymity(dwm, fig2_instance, AnonymityVariant.BY_DEPTH)
    replayed = False
    if not ad.passed:
        base = {
            v: ReportedType(parse_rational(e["peak"]), frozenset(e["invited"]))
            for v, e in ad.witness["profile"].items()
        }
        permuted = {
            v: ReportedType(parse_rational(e["peak"]), frozenset(e["invited"]))
            for v, e in ad.witness["permuted_profile"].items()
        }
        replayed = dwm.outcome(fig2_instance, base) == parse_rational(
            ad.witness["outcome"]
        ) and dwm.outcome(fig2_instance, permuted) == parse_rational(
            ad.witness["permuted_outcome"]
        )
    deep = make_deep_demo()
    vr3 = check_voter_relevance(dwm, deep, 3)
    depth3_fail = (
        not vr3.passed
        and vr3.witness["voter"] == "w"
        and deep.graph.true_depth("w") == 3
    )
    ok = not ad.passed and replayed and depth3_fail
    _criterion(
        "C4 negative claims",
        ok,
        "AN-D fails with replayable witness; VR-3 fails for the depth-3 voter",
    )


def test_c05_structure_anonymity_impossibility():
    runs = []
    for grid_points in (3, 4):
        inst = make_chain(3, grid_points)
        started = time.monotonic()
        base = solve(encode(inst, ["SP", "PE", "AN-S"]))
        runs.append((f"grid{grid_points}", base.verdict, time.monotonic() - started))
        for seed in (1, 2, 3):
            started = time.monotonic()
            shuffled = solve(encode(inst, ["SP", "PE", "AN-S"]), order_seed=seed)
            runs.append((f"grid{grid_points}/seed{seed}", shuffled.verdict, time.monotonic() - started))
    ok = all(verdict == "unsat" and elapsed < 120.0 for _, verdict, elapsed in runs)
    _criterion(
        "C5 structure-anonymity impossibility",
        ok,
        "; ".join(f"{name}={verdict} {elapsed:.2f}s" for name, verdict, elapsed in runs),
    )


def test_c06_depth_anonymity_impossibility_and_existence():
    inst = make_two_children_one_grandchild(3)
    started = time.monotonic()
    unsat = solve(encode(inst, ["SP", "PE", "AN-D", "VR-2"]))
    sat = solve(encode(inst, ["SP", "PE", "AN-D", "VR-1"]))
    replay_ok = False
    if sat.sat:
        replay = verify_model(inst, sat.model, ["SP", "PE", "AN-D", "VR-1"])
        replay_ok = all(r.passed for r in replay)
    elapsed = time.monotonic() - started
    ok = unsat.verdict == "unsat" and sat.sat and replay_ok and elapsed < 300.0
    _criterion(
        "C6 depth-anonymity boundary",
        ok,
        f"VR-2 unsat ({unsat.nodes_explored} nodes), VR-1 sat with full replay, {elapsed:.1f}s",
    )


def test_c07_depth1_hull(small_family):
    started = time.monotonic()
    failures = 0
    for inst in small_family:
        for rule in (DirectChildrenMedian(), DepthWeightedMedian()):
            if not check_depth1_hull(rule, inst).passed:
                failures += 1
    cases = [
        (make_chain(3, 3), ["SP", "PE", "AN-S"]),
        (make_chain(3, 4), ["SP", "PE", "AN-S"]),
        (make_two_children_one_grandchild(3), ["SP", "PE", "AN-D", "VR-2"]),
        (make_two_children_one_grandchild(3), ["SP", "PE", "AN-D", "VR-1"]),
    ]
    flips = 0
    for inst, props in cases:
        plain = solve(encode(inst, props)).verdict
        pruned = solve(encode(inst, props, CspOptions(depth1_hull=True))).verdict
        flips += plain != pruned
    elapsed = time.monotonic() - started
    ok = failures == 0 and flips == 0
    _criterion(
        "C7 depth-1 hull invariant",
        ok,
        f"{len(small_family)} instances x 2 rules, {failures} hull escapes, "
        f"{flips} verdict flips with the implied constraint, {elapsed:.1f}s",
    )


def test_c08_cross_checker_logic():
    started = time.monotonic()
    rules = [
        FixedOutcome(F(1, 2)),
        DirectChildrenMedian(),
        DepthWeightedMedian(),
        ParticipantMedian(),
    ]
    violations = 0
    for seed in range(100):
        inst = make_random(size=3, max_depth=3, grid_points=3, seed=seed)
        for rule in rules:
            an = {v: check_anonymity(rule, inst, v).passed for v in AnonymityVariant}
            if an[AnonymityVariant.FULL] and not (
                an[AnonymityVariant.BY_STRUCTURE] and an[AnonymityVariant.BY_DEPTH]
            ):
                violations += 1
            if (
                an[AnonymityVariant.BY_STRUCTURE] or an[AnonymityVariant.BY_DEPTH]
            ) and not an[AnonymityVariant.BY_STRUCTURE_DEPTH]:
                violations += 1
            if not check_sp(rule, inst, "diffusion_only").passed and check_sp(rule, inst).passed:
                violations += 1
            vr = {
                d: check_voter_relevance(rule, inst, d).passed
                for d in range(inst.graph.max_depth + 1)
            }
            for d in range(1, inst.graph.max_depth + 1):
                if vr[d] and not vr[d - 1]:
                    violations += 1
    elapsed = time.monotonic() - started
    ok = violations == 0
    _criterion(
        "C8 cross-checker logic",
        ok,
        f"100 seeded instances x 4 rules, {violations} implication violations, {elapsed:.1f}s",
    )


def _random_monotone_alpha(rng: random.Random, voters: list[str], grid) -> dict:
    raw = {}
    for r in range(len(voters) + 1):
        for subset in itertools.combinations(voters, r):
            raw[frozenset(subset)] = rng.choice(grid)
    table = {s: max(raw[t] for t in raw if t <= s) for s in raw}
    table[frozenset()] = F(0)
    table[frozenset(voters)] = F(1)
    return table


def _independent_max_min(table: dict, peaks: dict) -> Fraction:
    # written as an explicit recursion so it shares no code with the engine
    names = sorted(peaks)

    def best(idx: int, chosen: frozenset) -> Fraction:
        if idx == len(names):
            value = table[chosen]
            for v in chosen:
                if peaks[v] < value:
                    value = peaks[v]
            return value
        with_v = best(idx + 1, chosen | {names[idx]})
        without = best(idx + 1, chosen)
        return with_v if with_v > without else without

    return best(0, frozenset())


def test_c09_oracle_equivalences():
    started = time.monotonic()
    rng = random.Random(42)
    grid = uniform_grid(5)
    gmvs_mismatches = 0
    for _ in range(1000):
        n = rng.randint(1, 5)
        voters = [f"v{k}" for k in range(n)]
        table = _random_monotone_alpha(rng, voters, grid)
        peaks = {v: rng.choice(grid) for v in voters}
        if gmvs_evaluate(table.__getitem__, peaks) != _independent_max_min(table, peaks):
            gmvs_mismatches += 1

    hull_mismatches = 0
    profiles_checked = 0
    grid3 = uniform_grid(3)
    rules = [FixedOutcome(F(1, 2)), FixedOutcome(F(1)), DirectChildrenMedian(), ParticipantMedian()]
    for graph in tree_shapes(3, 3):
        for inst in instances_for(graph, grid3):
            for profile in enumerate_profiles(inst, ProfileFilters(truthful_peaks=True)):
                participating = participating_voters(inst.graph, profile)
                peaks = [inst.true_peaks[v] for v in participating]
                lo, hi = min(peaks), max(peaks)
                for rule in rules:
                    outcome = rule.outcome(inst, profile)
                    dominated = find_dominating_point(inst, profile, outcome) is not None
                    profiles_checked += 1
                    if dominated != (not lo <= outcome <= hi):
                        hull_mismatches += 1
    elapsed = time.monotonic() - started
    ok = gmvs_mismatches == 0 and hull_mismatches == 0
    _criterion(
        "C9 oracle equivalences",
        ok,
        f"1000 max-min draws, {profiles_checked} hull-vs-dominance profiles, "
        f"{gmvs_mismatches + hull_mismatches} mismatches, {elapsed:.1f}s",
    )


def test_c10_matrix_reproduces_decided_cells():
    started = time.monotonic()
    report = build_matrix()
    cells = report["cells"]
    expectations = {
        "VR-0|AN-S": "not-on-instance",
        "VR-2|AN-D": "not-on-instance",
        "VR-1|AN-D": "exists",
        "VR-2|AN-SD": "exists",
    }
    wrong = {
        key: cells[key]["verdict"]
        for key, want in expectations.items()
        if cells[key]["verdict"] != want
    }
    open_ok = all(
        cells[f"{row}|AN-SD"]["verdict"] == "open" for row in ("VR-n", "VR-3 .. VR-n-1")
    )
    evidence_ok = all(
        cells[key]["evidence"] in report["artifacts"] for key in expectations
    )
    elapsed = time.monotonic() - started
    ok = not wrong and open_ok and evidence_ok
    _criterion(
        "C10 existence matrix",
        ok,
        f"decided cells match, open cells rendered open, evidence attached, {elapsed:.1f}s",
    )
