r"""
Network latency caused by moving apps away from their data source.

Every move of an app from a source tier to a destination tier draws its
latency from the distribution between the app's source region and the region
it lands in. For each variant of integrating with the region scheduler, the
moves of the final mapping are sampled many times and the p99 of the
resulting empirical CDF is reported in whole milliseconds.

EXAMPLES::

    >>> from sptlb.testing import latency_snapshot
    >>> from sptlb.problem import RunConfig
    >>> from sptlb.evaluation.latency import eval_latency, latency_configs
    >>> configs = latency_configs(RunConfig(move_budget_fraction=1, seed=7), solvers=["optimal"])
    >>> report = eval_latency(latency_snapshot(), configs)
    >>> [(cell.variant, cell.worst_case_p99_ms) for cell in report.cells]
    [('no_cnst', 80), ('w_cnst', 1), ('manual_cnst', 1)]

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

import logging
from dataclasses import dataclass, replace

import numpy
import scipy.stats

from ..errors import Infeasible, ModelIncomplete, ValidationError
from ..hierarchy import HostPool, RegionPolicy, host_allocate
from ..problem import VARIANTS, add_avoid, compile_problem
from ..solvers import solve
from ..util import Deadline, derive_rng, round_half_up

logger = logging.getLogger(__name__)

# Number of batches drawn per tier pair.
SAMPLES = 1000


@dataclass(frozen=True)
class LatencyDistribution:
    r"""
    A normal distribution of latencies truncated at zero.

    EXAMPLES::

        >>> from sptlb.evaluation.latency import LatencyDistribution
        >>> from sptlb.util import derive_rng
        >>> samples = LatencyDistribution(20, 5).sample(derive_rng(0, "doc"), 1000)
        >>> samples.shape, bool((samples >= 0).all())
        ((1000,), True)
        >>> LatencyDistribution(7, 0).sample(derive_rng(0, "doc"), 3)
        array([7., 7., 7.])

    """
    mean_ms: float
    stddev_ms: float = 0.

    def __post_init__(self):
        for name in ("mean_ms", "stddev_ms"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool) or value < 0:
                raise ValidationError(name, f"must be non-negative but is {value!r}")
            object.__setattr__(self, name, float(value))

    def sample(self, rng, size):
        if self.stddev_ms == 0:
            return numpy.full(size, self.mean_ms)
        lower = -self.mean_ms / self.stddev_ms
        return scipy.stats.truncnorm.rvs(lower, numpy.inf, loc=self.mean_ms, scale=self.stddev_ms, size=size, random_state=rng)


@dataclass(frozen=True)
class LatencyModel:
    r"""
    Latency distributions between pairs of regions.

    If ``symmetric``, a pair that is missing is looked up in the other
    direction.

    EXAMPLES::

        >>> from sptlb.evaluation.latency import LatencyModel, LatencyDistribution
        >>> model = LatencyModel({("rA", "rB"): LatencyDistribution(40, 4)})
        >>> model.mean("rB", "rA")
        40.0
        >>> model.distribution("rA", "rC")
        Traceback (most recent call last):
        ...
        sptlb.errors.ModelIncomplete: latency model has no distribution for 'rA' -> 'rC'

    """
    pairs: dict
    symmetric: bool = True

    def __post_init__(self):
        object.__setattr__(self, "pairs", {key: self.pairs[key] for key in sorted(self.pairs)})

    def has(self, source, dest):
        return (source, dest) in self.pairs or (self.symmetric and (dest, source) in self.pairs)

    def distribution(self, source, dest):
        if (source, dest) in self.pairs:
            return self.pairs[(source, dest)]
        if self.symmetric and (dest, source) in self.pairs:
            return self.pairs[(dest, source)]
        raise ModelIncomplete(source, dest)

    def mean(self, source, dest):
        return self.distribution(source, dest).mean_ms

    def regions(self):
        return sorted({region for pair in self.pairs for region in pair})


@dataclass(frozen=True)
class LatencyCell:
    r"""
    The latency of the moves of one solver run for one integration variant.

    ``worst_case_p99_ms``, ``p50_ms`` and ``p0_ms`` are read from the CDF of
    all samples of the run; ``pair_p99_ms`` holds the p99 per pair of source
    and destination tier. ``status`` is ``infeasible`` if the solver could not
    produce a valid mapping, and the latencies are ``None`` then.
    """
    variant: str
    solver: str
    timeout: float
    worst_case_p99_ms: int
    p50_ms: int
    p0_ms: int
    sample_count: int
    moves: int
    pair_p99_ms: dict
    solve_elapsed: float
    evaluations: int
    status: str = "ok"
    avoid_added: int = 0


@dataclass(frozen=True)
class LatencyReport:
    cells: tuple = ()
    cdf_mode: str = "pooled"
    place_with_hosts: bool = False


def latency_configs(base, variants=VARIANTS, solvers=("local", "optimal"), timeouts=None):
    r"""
    Return the run configurations of an evaluation matrix, one per variant,
    solver and timeout, derived from ``base``.

    EXAMPLES::

        >>> from sptlb.problem import RunConfig
        >>> from sptlb.evaluation.latency import latency_configs
        >>> [(config.variant, config.solver, config.timeout) for config in latency_configs(RunConfig(), variants=["no_cnst"], timeouts=[1, 30])]
        [('no_cnst', 'local', 1.0), ('no_cnst', 'local', 30.0), ('no_cnst', 'optimal', 1.0), ('no_cnst', 'optimal', 30.0)]

    """
    timeouts = [base.timeout] if timeouts is None else timeouts
    return [replace(base, variant=variant, solver=solver, timeout=timeout) for variant in variants for solver in solvers for timeout in timeouts]


def nearest_region(model, source_region, tier):
    r"""
    Return the region of ``tier`` with the lowest mean latency from
    ``source_region``, ties broken by region id.

    EXAMPLES::

        >>> from sptlb.testing import latency_snapshot
        >>> from sptlb.evaluation.latency import nearest_region
        >>> snapshot = latency_snapshot()
        >>> nearest_region(snapshot.latency_model, "rA", snapshot.tier("t2"))
        'rA'

    """
    candidates = [(model.mean(source_region, region), region) for region in tier.regions if model.has(source_region, region)]
    if not candidates:
        raise ModelIncomplete(source_region, next(iter(tier.regions)))
    return min(candidates)[1]


def transitions(snapshot, solution, placements=None):
    r"""
    Group the moves of ``solution`` by source and destination tier.

    Returns a dict mapping tier pairs to the list of ``(app_id,
    source_region, dest_region)`` for the apps moving between them. The
    region an app lands in is taken from ``placements`` if it has one, and
    is the nearest region of the destination tier otherwise.
    """
    model = snapshot.latency_model
    placements = placements or {}
    grouped = {}
    for move in solution.moves:
        app = snapshot.app(move.app_id)
        region = placements.get(move.app_id) or nearest_region(model, app.source_region, snapshot.tier(move.dest))
        grouped.setdefault((move.source, move.dest), []).append((move.app_id, app.source_region, region))
    return {pair: sorted(grouped[pair]) for pair in sorted(grouped)}


def sample_transitions(model, grouped, rng, samples=SAMPLES):
    r"""
    Draw ``samples`` batches for every tier pair in ``grouped``, each batch
    with one latency per app moving between these tiers.

    Returns a dict mapping tier pairs to arrays of shape ``(samples, k)``.

    TESTS::

        >>> from sptlb.evaluation.latency import LatencyModel, LatencyDistribution, sample_transitions
        >>> from sptlb.util import derive_rng
        >>> model = LatencyModel({("rA", "rB"): LatencyDistribution(30, 3)})
        >>> grouped = {("t1", "t2"): [("a", "rA", "rB"), ("b", "rA", "rB")]}
        >>> sampled = sample_transitions(model, grouped, derive_rng(1, "doc"))
        >>> sampled[("t1", "t2")].shape
        (1000, 2)
        >>> bool((sampled[("t1", "t2")] == sample_transitions(model, grouped, derive_rng(1, "doc"))[("t1", "t2")]).all())
        True

    """
    return {pair: numpy.column_stack([model.distribution(source, dest).sample(rng, samples) for _, source, dest in apps]) for pair, apps in grouped.items()}


def _values(batches, cdf_mode):
    r"""
    Return the values whose CDF is read; all samples when pooling, the worst
    sample of each batch with the two layer reading.
    """
    if cdf_mode == "two_layer":
        return batches.max(axis=1)
    return batches.ravel()


def _percentile(values, q):
    return round_half_up(float(numpy.percentile(values, q)))


def latency_cell(snapshot, solution, rng, cdf_mode="pooled", placements=None):
    r"""
    Return the p99, p50 and p0 of the latency of the moves of ``solution``
    and the p99 per tier pair.

    EXAMPLES:

    Without moves there is no latency::

        >>> from sptlb.testing import latency_snapshot
        >>> from sptlb.solvers import make_solution
        >>> from sptlb.problem import RunConfig, compile_problem
        >>> from sptlb.evaluation.latency import latency_cell
        >>> from sptlb.util import derive_rng
        >>> snapshot = latency_snapshot()
        >>> problem = compile_problem(snapshot, RunConfig(move_budget_fraction=1))
        >>> latency_cell(snapshot, make_solution(problem, snapshot.identity(), "identity"), derive_rng(0))
        (0, 0, 0, {})

    A constant distribution is read exactly::

        >>> from sptlb.model import Snapshot
        >>> from sptlb.evaluation.latency import LatencyModel, LatencyDistribution
        >>> constant = Snapshot(snapshot.tiers, snapshot.apps, LatencyModel({("rA", "rA"): LatencyDistribution(7, 0), ("rA", "rB"): LatencyDistribution(9, 0), ("rA", "rC"): LatencyDistribution(9, 0)}))
        >>> problem = compile_problem(constant, RunConfig(move_budget_fraction=1))
        >>> latency_cell(constant, make_solution(problem, {**constant.identity(), "a1": "t2"}, "manual"), derive_rng(0))
        (7, 7, 7, {('t1', 't2'): 7})

    TESTS:

    The reading of the CDF is monotone::

        >>> from sptlb.testing import random_snapshot
        >>> import random
        >>> rnd = random.Random(6)
        >>> for seed in range(10):
        ...     snapshot = random_snapshot(seed, latency=True)
        ...     problem = compile_problem(snapshot, RunConfig(move_budget_fraction=1))
        ...     mapping = {app.app_id: rnd.choice(snapshot.tier_ids) for app in snapshot.apps}
        ...     for mode in ("pooled", "two_layer"):
        ...         p99, p50, p0, pairs = latency_cell(snapshot, make_solution(problem, mapping, "random"), derive_rng(seed), cdf_mode=mode)
        ...         assert p99 >= p50 >= p0 >= 0

    """
    grouped = transitions(snapshot, solution, placements)
    if not grouped:
        return 0, 0, 0, {}
    sampled = sample_transitions(snapshot.latency_model, grouped, rng)
    pairs = {pair: _percentile(_values(batches, cdf_mode), 99) for pair, batches in sampled.items()}
    values = _values(numpy.hstack(list(sampled.values())), cdf_mode)
    return _percentile(values, 99), _percentile(values, 50), _percentile(values, 0), pairs


def _placements(snapshot, config, solution):
    r"""
    Return the region the host scheduler puts each moved app in.

    Apps the region or host scheduler rejects are left out and land in the
    nearest region of their destination tier instead.

    TESTS:

    A move near the data lands where the host scheduler puts it::

        >>> from sptlb.testing import latency_snapshot
        >>> from sptlb.problem import RunConfig, compile_problem
        >>> from sptlb.solvers import make_solution
        >>> from sptlb.evaluation.latency import _placements
        >>> snapshot = latency_snapshot()
        >>> config = RunConfig(move_budget_fraction=1)
        >>> problem = compile_problem(snapshot, config)
        >>> _placements(snapshot, config, make_solution(problem, {**snapshot.identity(), "a1": "t2"}, "manual"))
        {'a1': 'rA'}

    The far away ``t3`` has no region near the data of ``a1``, so the move is
    rejected and left out::

        >>> _placements(snapshot, config, make_solution(problem, {**snapshot.identity(), "a1": "t3"}, "manual"))
        {}

    """
    policy = RegionPolicy.from_snapshot(snapshot, radius_ms=config.latency_radius_ms)
    decisions, _ = host_allocate([(move.app_id, move.dest) for move in solution.moves], policy, HostPool.from_snapshot(snapshot), slot_cost=config.slot_cost)
    for decision in decisions:
        if not decision.accepted:
            logger.warning("schedulers rejected %s on %s, sampling its latency from the nearest region instead", decision.app_id, decision.tier_id)
    return {decision.app_id: decision.region for decision in decisions if decision.accepted}


@dataclass(frozen=True)
class ManualRun:
    r"""
    The outcome of :func:`solve_manual`.

    ``avoid`` lists the forbidden ``(app_id, tier_id)`` pairs in the order
    they were added, ``rounds`` the solution of every round.
    """
    solution: object
    elapsed: float
    avoid: tuple
    rounds: tuple


def solve_manual(snapshot, config, place_with_hosts=False):
    r"""
    Solve ``snapshot`` with the avoid constraints an operator would add by
    hand after looking at the latency of the moves.

    Starting without any transition constraints, whenever the moves between
    two tiers have a p99 above ``manual_latency_threshold_ms`` (by default
    the ``latency_radius_ms``), the apps that made these moves are forbidden
    to go there and the problem is solved again. This repeats until no new
    pair is forbidden or ``config.timeout`` has passed in total.

    EXAMPLES:

    Each app that moves to the far away ``t3`` is forbidden to go there, until
    only moves to the nearby ``t2`` are left::

        >>> from sptlb.testing import latency_snapshot
        >>> from sptlb.problem import RunConfig
        >>> from sptlb.evaluation.latency import solve_manual
        >>> config = RunConfig(move_budget_fraction=1, variant="manual_cnst", manual_latency_threshold_ms=20)
        >>> run = solve_manual(latency_snapshot(), config)
        >>> sorted({move.dest for move in run.solution.moves})
        ['t2']
        >>> sorted(run.avoid)
        [('a1', 't3'), ('a2', 't3'), ('a3', 't3')]
        >>> len(run.rounds)
        4
        >>> run.elapsed >= run.solution.elapsed
        True

    Only the app that actually moved is forbidden, not its neighbors on the
    same tier::

        >>> first = run.rounds[0]
        >>> [(move.app_id, move.dest) for move in first.moves if move.dest == "t3"] == [run.avoid[0]]
        True

    TESTS:

    The same holds on generated snapshots, and the moves that remain stay
    below the threshold::

        >>> from sptlb.generator import GeneratorSpec, generate
        >>> from sptlb.evaluation.latency import latency_cell
        >>> from sptlb.util import derive_rng
        >>> for seed in range(10):
        ...     snapshot = generate(GeneratorSpec(tier_count=4, app_count=40, hot_tier_index=seed % 4, seed=seed))
        ...     run = solve_manual(snapshot, RunConfig(seed=seed, timeout=5, variant="manual_cnst"))
        ...     moved = {(move.app_id, move.dest) for solution in run.rounds for move in solution.moves}
        ...     assert set(run.avoid) <= moved, seed
        ...     _, _, _, pairs = latency_cell(snapshot, run.solution, derive_rng(seed))
        ...     assert all(p99 <= 30 for p99 in pairs.values()), (seed, pairs)

    """
    threshold = config.manual_latency_threshold_ms
    if threshold is None:
        threshold = config.latency_radius_ms

    deadline = Deadline(config.timeout)
    problem = compile_problem(snapshot, config)
    elapsed = 0.
    avoid = []
    rounds = []
    while True:
        solution = solve(problem, config, deadline=deadline.nested(config.timeout))
        rounds.append(solution)
        elapsed += solution.elapsed
        placements = _placements(snapshot, config, solution) if place_with_hosts else None
        grouped = transitions(snapshot, solution, placements)
        _, _, _, pairs = latency_cell(snapshot, solution, derive_rng(config.seed, "latency", "manual", config.solver, config.timeout, len(rounds)), config.cdf_mode, placements)

        added = len(avoid)
        for (source, dest), p99 in pairs.items():
            if p99 <= threshold:
                continue
            logger.info("forbidding the %d moves from %s to %s with p99 latency %d ms", len(grouped[(source, dest)]), source, dest, p99)
            for app_id, _, _ in grouped[(source, dest)]:
                if (app_id, dest) not in problem.avoid:
                    problem = add_avoid(problem, app_id, dest)
                    avoid.append((app_id, dest))
        if len(avoid) == added:
            break
        if deadline.expired():
            logger.warning("manual_cnst gave up after %d rounds with %d avoid pairs, moves with high latency remain", len(rounds), len(avoid))
            break

    logger.info("manual_cnst settled after %d rounds with %d avoid pairs", len(rounds), len(avoid))
    return ManualRun(solution, elapsed, tuple(avoid), tuple(rounds))


def eval_latency(snapshot, configs, place_with_hosts=False):
    r"""
    Evaluate the latency of the moves the solvers propose for each of
    ``configs``, see :func:`latency_configs`.

    For ``manual_cnst``, the moves are those of :func:`solve_manual`.

    With ``place_with_hosts``, moved apps land in the region the host
    scheduler picks instead of the nearest region.

    All variants of the same solver and timeout draw from the same random
    stream, so equal moves have equal latencies.

    EXAMPLES:

    The report is reproducible::

        >>> from sptlb.testing import latency_snapshot
        >>> from sptlb.problem import RunConfig
        >>> from sptlb.evaluation.latency import eval_latency, latency_configs
        >>> configs = latency_configs(RunConfig(move_budget_fraction=1, seed=3), solvers=["local"])
        >>> first, second = eval_latency(latency_snapshot(), configs), eval_latency(latency_snapshot(), configs)
        >>> [cell.worst_case_p99_ms for cell in first.cells] == [cell.worst_case_p99_ms for cell in second.cells]
        True
        >>> [cell.sample_count for cell in first.cells]
        [1000, 1000, 1000]

    A snapshot without latency model cannot be evaluated::

        >>> from sptlb.testing import two_tier_snapshot
        >>> eval_latency(two_tier_snapshot(), configs)
        Traceback (most recent call last):
        ...
        sptlb.errors.ValidationError: latency_model: snapshot has no latency model

    TESTS:

    On generated snapshots, where moving out of the regions of a tier is far
    more expensive than moving within them, ignoring the regions is worst
    and respecting them is best, up to rounding::

        >>> from sptlb.generator import GeneratorSpec, generate
        >>> for seed in range(20):
        ...     snapshot = generate(GeneratorSpec(tier_count=5, app_count=20, hot_tier_index=2, seed=seed))
        ...     report = eval_latency(snapshot, latency_configs(RunConfig(move_budget_fraction=.1, seed=seed, timeout=5)))
        ...     for solver in ("local", "optimal"):
        ...         p99 = {cell.variant: cell.worst_case_p99_ms for cell in report.cells if cell.solver == solver}
        ...         assert p99["no_cnst"] >= p99["manual_cnst"] >= p99["w_cnst"] - 1, (seed, solver, p99)

    Across the family, ignoring the regions actually costs latency::

        >>> worse = 0
        >>> for seed in range(20):
        ...     snapshot = generate(GeneratorSpec(tier_count=5, app_count=20, hot_tier_index=2, seed=seed))
        ...     cells = {cell.variant: cell for cell in eval_latency(snapshot, latency_configs(RunConfig(seed=seed, timeout=5), solvers=["local"])).cells}
        ...     worse += cells["no_cnst"].worst_case_p99_ms > cells["w_cnst"].worst_case_p99_ms + 1
        >>> worse > 0
        True

    Generated snapshots come with a complete latency model::

        >>> for seed in range(3):
        ...     snapshot = generate(GeneratorSpec(tier_count=4, app_count=30, region_count=4, hot_tier_index=2, seed=seed))
        ...     report = eval_latency(snapshot, latency_configs(RunConfig(move_budget_fraction=.1, seed=seed, timeout=5), solvers=["local"]))
        ...     for cell in report.cells:
        ...         assert cell.status == "infeasible" or cell.worst_case_p99_ms >= cell.p50_ms >= cell.p0_ms

    """
    if snapshot.latency_model is None:
        raise ValidationError("latency_model", "snapshot has no latency model")

    cells = []
    cdf_mode = None
    for config in configs:
        cdf_mode = cdf_mode or config.cdf_mode
        labels = (config.variant, config.solver, config.timeout)
        rng = derive_rng(config.seed, "latency", config.solver, config.timeout)
        added = 0
        try:
            if config.variant == "manual_cnst":
                run = solve_manual(snapshot, config, place_with_hosts=place_with_hosts)
                solution, elapsed, added = run.solution, run.elapsed, len(run.avoid)
            else:
                solution = solve(compile_problem(snapshot, config), config)
                elapsed = solution.elapsed
        except Infeasible as e:
            logger.warning("no latency for %s/%s/%ss: %s", *labels, e)
            cells.append(LatencyCell(*labels, None, None, None, SAMPLES, 0, {}, e.best_effort.elapsed if e.best_effort else 0., 0, status="infeasible", avoid_added=added))
            continue

        placements = _placements(snapshot, config, solution) if place_with_hosts else None
        p99, p50, p0, pairs = latency_cell(snapshot, solution, rng, config.cdf_mode, placements)
        cells.append(LatencyCell(*labels, p99, p50, p0, SAMPLES, len(solution.moves), pairs, elapsed, solution.evaluations, avoid_added=added))
        logger.info("latency of %s/%s/%ss: p99 %d ms over %d moves", *labels, p99, len(solution.moves))

    return LatencyReport(tuple(cells), cdf_mode or "pooled", place_with_hosts)
