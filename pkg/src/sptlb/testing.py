r"""
Fixtures and independent oracles for the doctests.

The hand-built snapshots are small enough that their expected results can
be checked without a computer. The oracles recompute feasibility, the best score and
host placements without going through the code they check.

EXAMPLES::

    >>> from sptlb.testing import two_tier_snapshot
    >>> snapshot = two_tier_snapshot()
    >>> [(app.app_id, app.cpu_p99, app.current_tier) for app in snapshot.apps]
    [('a40', 40.0, 't1'), ('a30', 30.0, 't1'), ('a10', 10.0, 't1')]

The sweeps at the end run the same checks over many generated workloads.
Their doctests take minutes and are marked ``slow``, run them with
``pytest -m slow``. Small sweeps run with the other doctests::

    >>> import tempfile
    >>> from sptlb.testing import constraint_sweep, oracle_sweep, balance_trend_sweep, repeat_sweep, scale_sweep
    >>> constraint_sweep(count=6), oracle_sweep(count=10), balance_trend_sweep(seeds=range(2))
    ([], [], [])
    >>> repeat_sweep(tempfile.mkdtemp(), repetitions=2), scale_sweep(seeds=[0], app_count=200)
    ([], [])

"""
# ********************************************************************
#  This file is part of sptlb.
#
#        Copyright (C) 2026 the sptlb authors
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.
# ********************************************************************

import glob
import itertools
import os

from .cli import run_cli
from .errors import Infeasible
from .evaluation.balance import eval_balance
from .evaluation.latency import LatencyDistribution, LatencyModel
from .generator import GeneratorSpec, generate
from .model import RESOURCES, AppRecord, Snapshot, TierSpec
from .problem import CAPACITY_TOLERANCE, SOLVERS, RunConfig, compile_problem, score
from .problem.order import compare
from .solvers import solve
from .solvers.local import solve_local
from .solvers.optimal import solve_optimal
from .util import derive_rng


def _app(app_id, cpu, mem=0, tasks=1, slo=1, criticality=0, source="r1", tier="t1"):
    return AppRecord(app_id, cpu_p99=cpu, mem_p99=mem, task_count=tasks, slo_score=slo, criticality_score=criticality, source_region=source, current_tier=tier)


def _tier(tier_id, cpu=100, mem=100, tasks=100, slos=(1,), regions=None):
    return TierSpec(tier_id, cpu_capacity=cpu, mem_capacity=mem, task_limit=tasks, supported_slos=slos, regions=regions or {"r1": 1})


def two_tier_snapshot(cpu_capacity=100, task_limit=100):
    r"""
    Return two tiers, the first one running apps of 40, 30 and 10 cpu, the
    second one empty.
    """
    return Snapshot(
        [_tier("t1", cpu=cpu_capacity, tasks=task_limit), _tier("t2", cpu=cpu_capacity, tasks=task_limit)],
        [_app("a40", 40), _app("a30", 30), _app("a10", 10)])


def uniform_snapshot(tiers, apps):
    r"""
    Return ``apps`` identical apps spread round robin over ``tiers`` tiers
    with plenty of room.

    EXAMPLES::

        >>> from sptlb.testing import uniform_snapshot
        >>> snapshot = uniform_snapshot(tiers=3, apps=7)
        >>> [app.current_tier for app in snapshot.apps]
        ['t1', 't2', 't3', 't1', 't2', 't3', 't1']

    """
    room = 2 * max(apps, 1)
    return Snapshot(
        [_tier(f"t{j + 1}", cpu=room, mem=room, tasks=room, regions={"r1": room}) for j in range(tiers)],
        [_app(f"u{i}", 1, mem=1, criticality=i % 5, tier=f"t{i % tiers + 1}") for i in range(apps)])


def three_app_snapshot():
    r"""
    Return three apps of different size and criticality on the first of two
    large tiers.
    """
    return Snapshot(
        [_tier("t1", regions={"r1": 3}), _tier("t2", regions={"r1": 3})],
        [_app("x", 10, mem=10, tasks=5, criticality=1), _app("y", 10, mem=10, tasks=7, criticality=9), _app("z", 10, mem=10, tasks=3, criticality=4)])


def slo_snapshot():
    r"""
    Return five tiers where the first three support SLO classes 1 to 3 and
    the last two support classes 3 and 4, with one app of each class.
    """
    tiers = [_tier(f"t{j}", slos=(1, 2, 3)) for j in (1, 2, 3)] + [_tier(f"t{j}", slos=(3, 4)) for j in (4, 5)]
    return Snapshot(tiers, [
        _app("slo1", 50, slo=1, tier="t1"),
        _app("slo2", 20, slo=2, tier="t2"),
        _app("slo3", 20, slo=3, tier="t3"),
        _app("slo4", 10, slo=4, tier="t4")])


def hot_tier_snapshot():
    r"""
    Return five tiers of identical apps where the third tier runs four times
    as many apps as each of the others.

    EXAMPLES::

        >>> from sptlb.testing import hot_tier_snapshot
        >>> from sptlb.model import project_metrics
        >>> snapshot = hot_tier_snapshot()
        >>> [metrics.cpu_util for metrics in project_metrics(snapshot, snapshot.identity())]
        [0.2, 0.2, 0.8, 0.2, 0.2]

    """
    counts = {"t1": 5, "t2": 5, "t3": 20, "t4": 5, "t5": 5}
    apps = []
    for tier_id, count in counts.items():
        for _ in range(count):
            apps.append(_app(f"h{len(apps):02d}", 4, mem=4, tasks=2, tier=tier_id))
    return Snapshot([_tier(tier_id, regions={"r1": 10}) for tier_id in counts], apps)


def adversarial_snapshot():
    r"""
    Return two tiers, one heavy on cpu and one heavy on memory, where the
    largest consumers of each resource sit on different tiers.
    """
    apps = [_app("c1", 40, mem=1)] + [_app(f"c{i}", 10, mem=2) for i in range(2, 6)]
    apps += [_app(f"m{i}", 2, mem=10, tier="t2") for i in range(1, 5)] + [_app("m5", 2, mem=40, tier="t2")]
    return Snapshot([_tier("t1", regions={"r1": 10}), _tier("t2", regions={"r1": 10})], apps)


def rejection_snapshot():
    r"""
    Return :func:`two_tier_snapshot` with regions: the largest app sources
    its data in ``rA``, which the second tier has no hosts in.
    """
    return Snapshot(
        [_tier("t1", regions={"rA": 3, "rB": 2}), _tier("t2", regions={"rB": 2})],
        [_app("a40", 40, source="rA"), _app("a30", 30, source="rB"), _app("a10", 10, source="rB")])


def latency_snapshot():
    r"""
    Return three apps on a tier in ``rA``, a second tier in ``rA`` and
    ``rB`` and a far away third tier in ``rC``, with constant latencies.
    """
    means = {("rA", "rA"): 1, ("rA", "rB"): 10, ("rA", "rC"): 80, ("rB", "rB"): 1, ("rB", "rC"): 80, ("rC", "rC"): 1}
    return Snapshot(
        [_tier("t1", regions={"rA": 3}), _tier("t2", regions={"rA": 3, "rB": 3}), _tier("t3", regions={"rC": 3})],
        [_app(f"a{i}", 30, source="rA") for i in (1, 2, 3)],
        LatencyModel({pair: LatencyDistribution(mean, 0) for pair, mean in means.items()}))


def random_snapshot(seed, latency=False):
    r"""
    Return a small random snapshot with two or three tiers and three to
    eight apps, small enough for exhaustive search.

    Apps are placed on a tier that supports their SLO and has room if there
    is one, so the current placement is feasible most of the time.

    EXAMPLES::

        >>> from sptlb.testing import random_snapshot
        >>> snapshot = random_snapshot(0)
        >>> 2 <= len(snapshot.tiers) <= 3 and 3 <= len(snapshot.apps) <= 8
        True
        >>> random_snapshot(0) == snapshot
        True

    """
    rng = derive_rng(seed, "testing", "random_snapshot")
    regions = ["r1", "r2", "r3"]

    def uniform(low, high):
        return round(float(rng.uniform(low, high)), 1)

    tiers = []
    for j in range(int(rng.integers(2, 4))):
        chosen = sorted(rng.choice(regions, size=int(rng.integers(1, 4)), replace=False).tolist())
        slos = [1, 2] if rng.random() < .6 else [int(rng.integers(1, 3))]
        tiers.append(_tier(f"t{j + 1}", cpu=uniform(20, 60), mem=uniform(20, 60), tasks=int(rng.integers(4, 11)), slos=slos, regions={region: int(rng.integers(0, 4)) for region in chosen}))

    used = {tier.tier_id: [0., 0., 0] for tier in tiers}
    apps = []
    for i in range(int(rng.integers(3, 9))):
        cpu, mem, tasks, slo = uniform(1, 15), uniform(1, 15), int(rng.integers(1, 4)), int(rng.integers(1, 3))
        supporting = [tier for tier in tiers if tier.supports(slo)] or tiers
        fitting = [tier for tier in supporting if used[tier.tier_id][0] + cpu <= tier.cpu_capacity and used[tier.tier_id][1] + mem <= tier.mem_capacity and used[tier.tier_id][2] + tasks <= tier.task_limit] or supporting
        tier = fitting[int(rng.integers(0, len(fitting)))]
        used[tier.tier_id][0] += cpu
        used[tier.tier_id][1] += mem
        used[tier.tier_id][2] += tasks
        apps.append(_app(f"a{i}", cpu, mem=mem, tasks=tasks, slo=slo, criticality=uniform(0, 5), source=str(rng.choice(regions)), tier=tier.tier_id))

    model = None
    if latency:
        pairs = {}
        for k, source in enumerate(regions):
            for dest in regions[k:]:
                mean = uniform(1, 3) if source == dest else uniform(20, 80)
                pairs[(source, dest)] = LatencyDistribution(mean, round(mean / 10, 2))
        model = LatencyModel(pairs)

    return Snapshot(tiers, apps, model)


def brute_force_violations(problem, mapping, overlap_threshold=.5):
    r"""
    Return the sorted codes of the constraints that ``mapping`` violates,
    recomputed from the raw snapshot.

    EXAMPLES::

        >>> from sptlb.testing import two_tier_snapshot, brute_force_violations
        >>> from sptlb.problem import RunConfig, compile_problem
        >>> snapshot = two_tier_snapshot(cpu_capacity=60)
        >>> brute_force_violations(compile_problem(snapshot, RunConfig(move_budget_fraction=0)), {"a40": "t2", "a30": "t1", "a10": "t1"})
        ['C3']

    """
    snapshot = problem.snapshot
    codes = set()
    for tier in snapshot.tiers:
        apps = [app for app in snapshot.apps if mapping[app.app_id] == tier.tier_id]
        if sum(app.cpu_p99 for app in apps) > tier.cpu_capacity * (1 + CAPACITY_TOLERANCE):
            codes.add("C1")
        if sum(app.mem_p99 for app in apps) > tier.mem_capacity * (1 + CAPACITY_TOLERANCE):
            codes.add("C1")
        if sum(app.task_count for app in apps) > tier.task_limit:
            codes.add("C2")
    if sum(mapping[app.app_id] != app.current_tier for app in snapshot.apps) > problem.move_budget:
        codes.add("C3")
    for app in snapshot.apps:
        dest = snapshot.tier(mapping[app.app_id])
        if (app.app_id, dest.tier_id) in problem.avoid or (problem.enforce_slo and app.slo_score not in dest.supported_slos):
            codes.add("C4")
        if problem.variant == "w_cnst" and dest.tier_id != app.current_tier:
            source = snapshot.tier(app.current_tier)
            if len(set(source.regions) & set(dest.regions)) <= overlap_threshold * len(source.regions):
                codes.add("C5")
    return sorted(codes)


def brute_force_best(problem):
    r"""
    Return the best score of any feasible mapping of ``problem`` by trying
    all of them, or ``None`` if there is no feasible mapping.

    EXAMPLES::

        >>> from sptlb.testing import two_tier_snapshot, brute_force_best
        >>> from sptlb.problem import RunConfig, compile_problem
        >>> brute_force_best(compile_problem(two_tier_snapshot(), RunConfig(move_budget_fraction=1)))
        ScoreVector(g5_over_target=0.0, g6_resource_imbalance=0.0, g7_task_imbalance=0.01, g8_movement_cost=1, g9_critical_moves=0.0, feasible=True)
        >>> brute_force_best(compile_problem(two_tier_snapshot(cpu_capacity=60), RunConfig(move_budget_fraction=0))) is None
        True

    """
    snapshot = problem.snapshot
    best = None
    for tiers in itertools.product(snapshot.tier_ids, repeat=len(snapshot.apps)):
        if sum(tier_id != app.current_tier for tier_id, app in zip(tiers, snapshot.apps)) > problem.move_budget:
            continue
        mapping = {app.app_id: tier_id for app, tier_id in zip(snapshot.apps, tiers)}
        if brute_force_violations(problem, mapping):
            continue
        candidate = score(problem, mapping)
        if best is None or compare(candidate, best, problem.goal_priorities) < 0:
            best = candidate
    return best


def first_fit_hosts(moves, policy, pool):
    r"""
    Return the ids of the apps among ``moves`` that get a host slot when
    each app, in id order, takes one slot in its fullest-free acceptable
    region.

    EXAMPLES::

        >>> from sptlb.testing import rejection_snapshot, first_fit_hosts
        >>> from sptlb.hierarchy import RegionPolicy, HostPool
        >>> snapshot = rejection_snapshot()
        >>> first_fit_hosts([("a30", "t2"), ("a10", "t2")], RegionPolicy.from_snapshot(snapshot), HostPool({("t2", "rB"): 1}))
        ['a10']

    """
    free = dict(pool.slots)
    accepted = []
    for app_id, tier_id in sorted(moves):
        regions = sorted(region for region in policy.snapshot.tier(tier_id).regions if region in policy.acceptable[app_id])
        regions.sort(key=lambda region: free.get((tier_id, region), 0), reverse=True)
        if regions and free.get((tier_id, regions[0]), 0) >= 1:
            free[(tier_id, regions[0])] -= 1
            accepted.append(app_id)
    return accepted

def constraint_sweep(count=1000, seed=0, optimal_timeout=.1):
    r"""
    Solve ``count`` generated snapshots of 2 to 6 tiers and 5 to 200 apps
    with every solver and return the runs whose result does not hold up.

    Runs use the default movement budget of a tenth of the apps and
    alternate between ``no_cnst`` and ``w_cnst``. A run fails if a solution
    that is not flagged breaks a constraint when rechecked by
    :func:`brute_force_violations`, if it moves more than a tenth of the
    apps, or if the solver raises although the current placement is valid.

    Returns a list of ``(index, solver, reason)``.

    EXAMPLES::

        >>> from sptlb.testing import constraint_sweep
        >>> constraint_sweep()
        []

    """
    rng = derive_rng(seed, "testing", "constraint_sweep")
    failures = []
    for i in range(count):
        tier_count = int(rng.integers(2, 7))
        hot = int(rng.integers(0, tier_count + 1))
        spec = GeneratorSpec(tier_count=tier_count, app_count=int(rng.integers(5, 201)), hot_tier_index=hot if hot < tier_count else None, seed=int(rng.integers(1 << 32)))
        snapshot = generate(spec)
        budget = len(snapshot.apps) // 10
        variant = ("no_cnst", "w_cnst")[i % 2]
        for solver in SOLVERS:
            config = RunConfig(seed=i, solver=solver, variant=variant, timeout=optimal_timeout if solver == "optimal" else 30)
            problem = compile_problem(snapshot, config)
            try:
                solution = solve(problem, config)
            except Infeasible as e:
                failures.append((i, solver, f"raised: {e}"))
                continue
            if len(solution.moves) > budget:
                failures.append((i, solver, f"moved {len(solution.moves)} of {len(snapshot.apps)} apps"))
            if solution.feasible:
                codes = brute_force_violations(problem, solution.mapping, config.region_overlap_threshold)
                if codes:
                    failures.append((i, solver, f"violates {', '.join(codes)}"))
    return failures


def oracle_sweep(count=200):
    r"""
    Return the seeds of :func:`random_snapshot` on which the exact solver
    does not find the score that :func:`brute_force_best` finds.

    EXAMPLES::

        >>> from sptlb.testing import oracle_sweep
        >>> oracle_sweep()
        []

    """
    failures = []
    for seed in range(count):
        config = RunConfig(move_budget_fraction=(.3, .6, 1)[seed % 3], seed=seed, solver="optimal", variant=("no_cnst", "w_cnst")[seed % 2])
        problem = compile_problem(random_snapshot(seed), config)
        best = brute_force_best(problem)
        try:
            solution = solve_optimal(problem, config)
        except Infeasible:
            if best is not None:
                failures.append(seed)
            continue
        if best is None or compare(solution.score, best, problem.goal_priorities) != 0:
            failures.append(seed)
    return failures


def balance_trend_sweep(seeds=range(20)):
    r"""
    Return where the balancer or a baseline fails to even out a generated
    snapshot with one hot tier.

    The balancer must reduce the imbalance of every resource; each greedy
    baseline must at least reduce the imbalance of the resource it
    optimizes.

    Returns a list of ``(seed, solver, resource)``.

    EXAMPLES::

        >>> from sptlb.testing import balance_trend_sweep
        >>> balance_trend_sweep()
        []

    """
    failures = []
    for seed in seeds:
        snapshot = generate(GeneratorSpec(tier_count=5, app_count=80 + 10 * (seed % 5), hot_tier_index=seed % 5, seed=seed))
        report = eval_balance(snapshot, RunConfig(seed=seed))
        for resource in RESOURCES:
            for solver in ("local", f"greedy_{resource}"):
                if not report.result(solver).imbalance[resource] < report.initial_imbalance[resource]:
                    failures.append((seed, solver, resource))
    return failures


def repeat_sweep(directory, repetitions=10, seed=7):
    r"""
    Run ``balance``, ``eval-balance`` and ``eval-latency`` on a generated
    snapshot ``repetitions`` times each, writing to ``directory``, and return
    the commands whose exit code or output files were not the same every
    time.

    EXAMPLES::

        >>> import tempfile
        >>> from sptlb.testing import repeat_sweep
        >>> repeat_sweep(tempfile.mkdtemp())
        []

    """
    snapshot = os.path.join(directory, "snapshot.yaml")
    run_cli(["generate", "--tiers", "4", "--apps", "40", "--hot-tier", "1", "--seed", str(seed), "-o", snapshot])
    commands = {
        "balance": ["balance", snapshot, "--seed", str(seed), "-o", "{prefix}.json"],
        "eval-balance": ["eval-balance", snapshot, "--seed", str(seed), "--out", "{prefix}"],
        "eval-latency": ["eval-latency", snapshot, "--seed", str(seed), "--solvers", "local", "--out", "{prefix}"],
    }

    differing = []
    for name, argv in commands.items():
        outcomes = set()
        for repetition in range(repetitions):
            prefix = os.path.join(directory, f"{name}-{repetition}")
            code = run_cli([arg.format(prefix=prefix) for arg in argv])
            contents = []
            for path in sorted(glob.glob(f"{prefix}.*")):
                with open(path, "rb") as stream:
                    contents.append((os.path.splitext(path)[1], stream.read()))
            outcomes.add((code, tuple(contents)))
        if len(outcomes) != 1:
            differing.append(name)
    return differing


def scale_sweep(seeds=range(3), tier_count=5, app_count=1000):
    r"""
    Balance generated snapshots of ``app_count`` apps with the local search
    at the default timeout of 30 seconds and return what went wrong.

    Every run must finish before the timeout with a valid solution that is
    better than the current placement.

    Returns a list of ``(seed, reason)``.

    EXAMPLES::

        >>> from sptlb.testing import scale_sweep
        >>> scale_sweep()
        []

    """
    failures = []
    for seed in seeds:
        snapshot = generate(GeneratorSpec(tier_count=tier_count, app_count=app_count, hot_tier_index=seed % tier_count, seed=seed))
        config = RunConfig(seed=seed)
        problem = compile_problem(snapshot, config)
        solution = solve_local(problem, config)
        if solution.terminated_by == "timeout":
            failures.append((seed, "timed out"))
        if not solution.feasible or brute_force_violations(problem, solution.mapping):
            failures.append((seed, "invalid"))
        if compare(solution.score, score(problem, snapshot.identity()), problem.goal_priorities) >= 0:
            failures.append((seed, "no improvement"))
    return failures
