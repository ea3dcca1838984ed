r"""
Co-operation with the lower level schedulers.

The balancer only decides which tier an app goes to. A region scheduler then
checks whether the destination tier has hosts near the app's data source,
and a host scheduler checks whether there is a free host in such a region.
Whenever one of them rejects a move, the balancer learns to avoid that app on
that tier and solves again, until all moves are acknowledged, the iteration
limit is reached, or time is up.

EXAMPLES:

The rejection fixture has the largest app source its data in a region that
the second tier has no hosts in, so the first proposal is rejected and the
second one is acknowledged::

    >>> from sptlb.testing import rejection_snapshot
    >>> from sptlb.problem import RunConfig, compile_problem
    >>> from sptlb.hierarchy import RegionPolicy, HostPool, cooperate
    >>> snapshot = rejection_snapshot()
    >>> config = RunConfig(move_budget_fraction=1)
    >>> trace = cooperate(compile_problem(snapshot, config), config, RegionPolicy.from_snapshot(snapshot), HostPool.from_snapshot(snapshot))
    >>> trace.outcome, len(trace.iterations)
    ('acknowledged', 2)
    >>> trace.iterations[0].region_rejections
    (('a40', 't2'),)
    >>> trace.final.mapping
    {'a40': 't1', 'a30': 't2', 'a10': 't2'}

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
from dataclasses import dataclass, field

from ..errors import Infeasible, SolverContractError, UnknownIdError, ValidationError
from ..problem import add_avoid
from ..solvers import make_solution, solve as solve_problem
from ..util import Deadline

logger = logging.getLogger(__name__)

OUTCOMES = ("acknowledged", "timeout", "iteration_limit", "infeasible")


@dataclass(frozen=True)
class RegionPolicy:
    r"""
    Where apps may run as far as the region scheduler is concerned.

    EXAMPLES::

        >>> from sptlb.testing import rejection_snapshot
        >>> from sptlb.hierarchy import RegionPolicy
        >>> policy = RegionPolicy.from_snapshot(rejection_snapshot())
        >>> sorted(policy.acceptable_regions("a40")), sorted(policy.tier_regions("t2"))
        (['rA'], ['rB'])

    TESTS::

        >>> RegionPolicy(rejection_snapshot(), {"a40": frozenset()})
        Traceback (most recent call last):
        ...
        sptlb.errors.ValidationError: acceptable.a40: app has no acceptable region

    """
    snapshot: object
    acceptable: dict

    def __post_init__(self):
        for app_id, regions in self.acceptable.items():
            self.snapshot.app(app_id)
            if not regions:
                raise ValidationError(f"acceptable.{app_id}", "app has no acceptable region")

    @classmethod
    def from_snapshot(cls, snapshot, radius_ms=30.):
        r"""
        Return the policy that accepts an app in its source region and in
        every region within ``radius_ms`` of it on average.

        Without a latency model, only the source region is acceptable.

        EXAMPLES::

            >>> from sptlb.testing import latency_snapshot
            >>> from sptlb.hierarchy import RegionPolicy
            >>> snapshot = latency_snapshot()
            >>> sorted(RegionPolicy.from_snapshot(snapshot, radius_ms=30).acceptable_regions("a1"))
            ['rA', 'rB']
            >>> sorted(RegionPolicy.from_snapshot(snapshot, radius_ms=5).acceptable_regions("a1"))
            ['rA']

        """
        model = snapshot.latency_model
        regions = sorted({region for tier in snapshot.tiers for region in tier.regions})
        acceptable = {}
        for app in snapshot.apps:
            near = {app.source_region}
            if model is not None:
                near.update(region for region in regions if model.has(app.source_region, region) and model.mean(app.source_region, region) <= radius_ms)
            acceptable[app.app_id] = frozenset(near)
        return cls(snapshot, acceptable)

    def acceptable_regions(self, app_id):
        try:
            return self.acceptable[app_id]
        except KeyError:
            raise UnknownIdError("app", app_id)

    def tier_regions(self, tier_id):
        return frozenset(self.snapshot.tier(tier_id).regions)


@dataclass
class HostPool:
    r"""
    The free host slots per tier and region.

    EXAMPLES::

        >>> from sptlb.testing import rejection_snapshot
        >>> from sptlb.hierarchy import HostPool
        >>> pool = HostPool.from_snapshot(rejection_snapshot())
        >>> pool.free("t2", "rB"), pool.free("t2", "rA"), pool.total_free()
        (2, 0, 7)

    TESTS::

        >>> HostPool({("t2", "rB"): -1})
        Traceback (most recent call last):
        ...
        sptlb.errors.ValidationError: slots.t2.rB: must be non-negative but is -1

    """
    slots: dict = field(default_factory=dict)

    def __post_init__(self):
        for (tier_id, region), free in self.slots.items():
            if free < 0:
                raise ValidationError(f"slots.{tier_id}.{region}", f"must be non-negative but is {free}")

    @classmethod
    def from_snapshot(cls, snapshot):
        return cls({(tier.tier_id, region): slots for tier in snapshot.tiers for region, slots in tier.regions.items()})

    def free(self, tier_id, region):
        return self.slots.get((tier_id, region), 0)

    def total_free(self):
        return sum(self.slots.values())

    def copy(self):
        return HostPool(dict(self.slots))


@dataclass(frozen=True)
class HostDecision:
    r"""
    What the host scheduler did with a single move; ``region`` is ``None``
    for rejected moves.
    """
    app_id: str
    tier_id: str
    region: str
    accepted: bool


def region_check(move, policy):
    r"""
    Return whether the region scheduler accepts ``move``, a pair of an app
    id and a destination tier id, i.e., whether the tier has hosts in a
    region acceptable for the app.

    EXAMPLES::

        >>> from sptlb.testing import rejection_snapshot
        >>> from sptlb.hierarchy import RegionPolicy, region_check
        >>> policy = RegionPolicy.from_snapshot(rejection_snapshot())
        >>> region_check(("a40", "t1"), policy), region_check(("a40", "t2"), policy), region_check(("a30", "t2"), policy)
        (True, False, True)

    TESTS:

    The decision is a plain intersection test::

        >>> import random
        >>> from sptlb.model import AppRecord, Snapshot, TierSpec
        >>> rnd = random.Random(2)
        >>> names = ["r1", "r2", "r3", "r4"]
        >>> for _ in range(100):
        ...     tier = TierSpec("t", 1, 1, 1, supported_slos=[1], regions={region: 1 for region in rnd.sample(names, rnd.randint(1, 4))})
        ...     app = AppRecord("a", 0, 0, 1, 1, 0, "r1", "t")
        ...     acceptable = frozenset(rnd.sample(names, rnd.randint(1, 4)))
        ...     policy = RegionPolicy(Snapshot([tier], [app]), {"a": acceptable})
        ...     assert region_check(("a", "t"), policy) == bool(set(tier.regions) & acceptable)

        >>> region_check(("a40", "t9"), RegionPolicy.from_snapshot(rejection_snapshot()))
        Traceback (most recent call last):
        ...
        sptlb.errors.UnknownIdError: unknown tier 't9'

    """
    app_id, tier_id = move
    return bool(policy.tier_regions(tier_id) & policy.acceptable_regions(app_id))


def host_allocate(moves, policy, pool, slot_cost="apps"):
    r"""
    Place each of ``moves`` on a host, in the order of app ids.

    Each app goes to the acceptable region of its destination tier with the
    most free slots, ties broken by region id. A move is rejected if none of
    these regions has room left. With ``slot_cost="tasks"``, an app takes one
    slot per task instead of a single slot.

    Returns the decisions in app id order and the updated pool; ``pool``
    itself is not modified.

    EXAMPLES::

        >>> from sptlb.testing import rejection_snapshot
        >>> from sptlb.hierarchy import RegionPolicy, HostPool, host_allocate
        >>> snapshot = rejection_snapshot()
        >>> policy = RegionPolicy.from_snapshot(snapshot)
        >>> pool = HostPool({("t2", "rB"): 1})
        >>> decisions, after = host_allocate([("a30", "t2")], policy, pool)
        >>> decisions
        [HostDecision(app_id='a30', tier_id='t2', region='rB', accepted=True)]
        >>> after.free("t2", "rB"), pool.free("t2", "rB")
        (0, 1)

    Two moves compete for the last slot::

        >>> decisions, after = host_allocate([("a30", "t2"), ("a10", "t2")], policy, pool)
        >>> [(decision.app_id, decision.accepted) for decision in decisions]
        [('a10', True), ('a30', False)]

    TESTS:

    The accepted moves agree with an independent first-fit simulation and
    free slots shrink by exactly the number of accepted moves::

        >>> import random
        >>> from sptlb.testing import random_snapshot, first_fit_hosts
        >>> rnd = random.Random(4)
        >>> for seed in range(50):
        ...     snapshot = random_snapshot(seed)
        ...     policy = RegionPolicy.from_snapshot(snapshot)
        ...     pool = HostPool({key: rnd.randint(0, 2) for key in HostPool.from_snapshot(snapshot).slots})
        ...     moves = [(app.app_id, rnd.choice(snapshot.tier_ids)) for app in snapshot.apps if rnd.random() < .6]
        ...     moves = [move for move in moves if region_check(move, policy)]
        ...     decisions, after = host_allocate(moves, policy, pool)
        ...     assert [d.app_id for d in decisions if d.accepted] == first_fit_hosts(moves, policy, pool)
        ...     assert pool.total_free() - after.total_free() == sum(d.accepted for d in decisions)

    """
    pool = pool.copy()
    decisions = []
    for app_id, tier_id in sorted(moves):
        app = policy.snapshot.app(app_id)
        cost = app.task_count if slot_cost == "tasks" else 1
        candidates = sorted(policy.tier_regions(tier_id) & policy.acceptable_regions(app_id))
        region = None
        if candidates:
            best = min(candidates, key=lambda candidate: (-pool.free(tier_id, candidate), candidate))
            if pool.free(tier_id, best) >= cost:
                region = best
                pool.slots[(tier_id, region)] -= cost
        decisions.append(HostDecision(app_id, tier_id, region, region is not None))
    return decisions, pool


@dataclass(frozen=True)
class CoopIteration:
    r"""
    One round trip between the balancer and the lower level schedulers.
    """
    proposed: tuple
    region_rejections: tuple
    host_rejections: tuple
    avoid_added: tuple


@dataclass(frozen=True)
class CoopTrace:
    r"""
    The record of a co-operation session.

    ``final`` is the last fully acknowledged solution or, if there was none,
    the current placement; the latter is flagged as ``unresolved``.
    ``placements`` records the region each acknowledged move was placed in.
    """
    iterations: tuple
    outcome: str
    final: object
    unresolved: bool
    avoid: frozenset = frozenset()
    placements: dict = field(default_factory=dict)
    pool: object = None


def cooperate(problem, config, policy, pool, solve=None):
    r"""
    Run the balancer against the region and host schedulers until they
    acknowledge a solution.

    Every rejected move is turned into an avoid pair and the problem is
    solved again from scratch. The session ends after
    ``config.max_hierarchy_iterations`` solves or ``config.timeout``
    seconds, whichever comes first, with the current placement as an
    unresolved fallback.

    The ``solve`` callable defaults to :func:`sptlb.solvers.solve`.

    EXAMPLES:

    Moves that are fine right away are acknowledged in a single round::

        >>> from sptlb.testing import rejection_snapshot
        >>> from sptlb.problem import RunConfig, compile_problem
        >>> from sptlb.hierarchy import RegionPolicy, HostPool, cooperate
        >>> snapshot = rejection_snapshot()
        >>> config = RunConfig(move_budget_fraction=1)
        >>> policy = RegionPolicy(snapshot, {"a40": frozenset({"rA", "rB"}), "a30": frozenset({"rB"}), "a10": frozenset({"rB"})})
        >>> trace = cooperate(compile_problem(snapshot, config), config, policy, HostPool.from_snapshot(snapshot))
        >>> trace.outcome, len(trace.iterations), trace.unresolved
        ('acknowledged', 1, False)
        >>> trace.placements
        {'a40': 'rB'}

    A region scheduler that rejects everything exhausts the iterations::

        >>> config = RunConfig(move_budget_fraction=1, max_hierarchy_iterations=2)
        >>> nowhere = RegionPolicy(snapshot, {app.app_id: frozenset({"r0"}) for app in snapshot.apps})
        >>> trace = cooperate(compile_problem(snapshot, config), config, nowhere, HostPool.from_snapshot(snapshot))
        >>> trace.outcome, len(trace.iterations), trace.unresolved, trace.final.moves
        ('iteration_limit', 2, True, ())

    Without free hosts, the host scheduler rejects::

        >>> config = RunConfig(move_budget_fraction=1)
        >>> trace = cooperate(compile_problem(snapshot, config), config, RegionPolicy.from_snapshot(snapshot), HostPool())
        >>> trace.iterations[1].host_rejections
        (('a10', 't2'), ('a30', 't2'))

    A baseline that cannot relieve an overloaded tier within the budget
    returns a mapping that violates the capacities; it is never passed on to
    the schedulers::

        >>> from sptlb.testing import two_tier_snapshot
        >>> overloaded = two_tier_snapshot(cpu_capacity=60)
        >>> config = RunConfig(move_budget_fraction=0, solver="greedy_cpu")
        >>> trace = cooperate(compile_problem(overloaded, config), config, RegionPolicy.from_snapshot(overloaded), HostPool.from_snapshot(overloaded))
        >>> trace.outcome, trace.iterations, trace.unresolved, trace.final.moves
        ('infeasible', (), True, ())

    TESTS:

    A solver that proposes a move it was told to avoid is a bug::

        >>> from sptlb.solvers import make_solution
        >>> def stubborn(problem, config, deadline=None):
        ...     return make_solution(problem, {**problem.snapshot.identity(), "a40": "t2"}, "stubborn")
        >>> config = RunConfig(move_budget_fraction=1)
        >>> cooperate(compile_problem(snapshot, config), config, nowhere, HostPool.from_snapshot(snapshot), solve=stubborn)
        Traceback (most recent call last):
        ...
        sptlb.errors.SolverContractError: solver 'stubborn' proposed moves it was told to avoid: a40 -> t2

    The avoid set grows on every round that is not the last one, and
    acknowledged moves pass both schedulers when replayed::

        >>> from sptlb.testing import random_snapshot
        >>> from sptlb.hierarchy import region_check, host_allocate
        >>> for seed in range(20):
        ...     snapshot = random_snapshot(seed)
        ...     config = RunConfig(move_budget_fraction=.5, max_hierarchy_iterations=6, seed=seed)
        ...     problem = compile_problem(snapshot, config)
        ...     policy, pool = RegionPolicy.from_snapshot(snapshot), HostPool.from_snapshot(snapshot)
        ...     trace = cooperate(problem, config, policy, pool)
        ...     assert len(trace.iterations) <= config.max_hierarchy_iterations
        ...     for iteration in trace.iterations[:-1]:
        ...         assert iteration.avoid_added
        ...     if trace.outcome == "acknowledged":
        ...         moves = [(move.app_id, move.dest) for move in trace.final.moves]
        ...         assert all(region_check(move, policy) for move in moves)
        ...         assert all(decision.accepted for decision in host_allocate(moves, policy, pool)[0])
        ...     else:
        ...         assert trace.unresolved and not trace.final.moves

    """
    solve = solve or solve_problem

    deadline = Deadline(config.timeout)
    current = problem
    iterations = []
    outcome = "iteration_limit"
    final, placements, final_pool = None, {}, None

    for i in range(config.max_hierarchy_iterations):
        if deadline.expired():
            outcome = "timeout"
            break
        try:
            solution = solve(current, config, deadline=deadline)
        except Infeasible as e:
            logger.warning("solver reports an infeasible problem in iteration %d: %s", i + 1, e)
            outcome = "infeasible"
            break

        proposed = tuple((move.app_id, move.dest) for move in solution.moves)
        avoided = [pair for pair in proposed if pair in current.avoid]
        if avoided:
            raise SolverContractError(f"solver {solution.solver_name!r} proposed moves it was told to avoid: " + ", ".join(f"{app_id} -> {tier_id}" for app_id, tier_id in avoided))
        if not solution.feasible:
            logger.warning("%s returned a mapping that violates constraints in iteration %d, not proposing it: %s", solution.solver_name, i + 1, "; ".join(str(v) for v in solution.violations))
            outcome = "infeasible"
            break

        region_rejections = tuple(move for move in proposed if not region_check(move, policy))
        host_rejections = ()
        if not region_rejections:
            decisions, allocated = host_allocate(proposed, policy, pool, slot_cost=config.slot_cost)
            host_rejections = tuple((decision.app_id, decision.tier_id) for decision in decisions if not decision.accepted)

        rejected = region_rejections + host_rejections
        added = tuple(pair for pair in rejected if pair not in current.avoid)
        iterations.append(CoopIteration(proposed, region_rejections, host_rejections, added))
        logger.info("iteration %d: %d moves proposed, %d rejected by regions, %d by hosts", i + 1, len(proposed), len(region_rejections), len(host_rejections))

        if not rejected:
            outcome = "acknowledged"
            final = solution
            placements = {decision.app_id: decision.region for decision in decisions}
            final_pool = allocated
            break

        for app_id, tier_id in added:
            current = add_avoid(current, app_id, tier_id)

        if solution.terminated_by == "timeout" and deadline.expired():
            outcome = "timeout"
            break

    unresolved = final is None
    if unresolved:
        logger.warning("lower level schedulers did not acknowledge a solution (%s), keeping the current placement", outcome)
        final = make_solution(problem, problem.snapshot.identity(), "identity", elapsed=deadline.elapsed())
        final_pool = pool.copy()

    return CoopTrace(tuple(iterations), outcome, final, unresolved, current.avoid, placements, final_pool)
