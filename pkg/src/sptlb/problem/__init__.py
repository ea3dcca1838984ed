r"""
The balancing problem: hard constraints, prioritized goals, the movement
budget and the avoid list, compiled from a snapshot and a run configuration.

Constraints, all of which a valid mapping satisfies:

- C1: no tier exceeds its cpu or memory capacity,
- C2: no tier exceeds its task limit,
- C3: at most ``move_budget`` apps move,
- C4: no app lands on a tier it must avoid, in particular on a tier that
  does not support its SLO,
- C5: with region constraints (``w_cnst``), apps only move between tiers
  whose regions overlap enough.

Goals, in default priority order:

- G5: utilization stays under each tier's target,
- G6: cpu and memory utilization are balanced across tiers,
- G7: task count utilization is balanced across tiers,
- G8: few tasks are restarted by moves,
- G9: apps of high criticality are not moved.

EXAMPLES::

    >>> from sptlb.testing import two_tier_snapshot
    >>> from sptlb.problem import RunConfig, compile_problem, is_feasible, score
    >>> snapshot = two_tier_snapshot()
    >>> problem = compile_problem(snapshot, RunConfig(move_budget_fraction=1))
    >>> problem.move_budget
    3
    >>> bool(is_feasible(problem, snapshot.identity()))
    True
    >>> score(problem, {**snapshot.identity(), "a40": "t2"})
    ScoreVector(g5_over_target=0.0, g6_resource_imbalance=0.0, g7_task_imbalance=0.01, g8_movement_cost=1, g9_critical_moves=0.0, feasible=True)

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

import enum
import logging
import math
from dataclasses import dataclass, field, replace

import numpy

from ..errors import ValidationError, UnknownIdError
from ..model import RESOURCES, check_mapping, imbalance, project_metrics
from .order import GOALS, ScoreVector, compare

logger = logging.getLogger(__name__)

SOLVERS = ("local", "optimal", "greedy_cpu", "greedy_mem", "greedy_tasks")
VARIANTS = ("no_cnst", "w_cnst", "manual_cnst")
SLOT_COSTS = ("apps", "tasks")
CDF_MODES = ("pooled", "two_layer")

# Relative slack on capacity checks so that summation order does not decide feasibility.
CAPACITY_TOLERANCE = 1e-9


@dataclass(frozen=True)
class RunConfig:
    r"""
    Settings of a single balancing run.

    EXAMPLES::

        >>> from sptlb.problem import RunConfig
        >>> config = RunConfig()
        >>> config.move_budget_fraction, config.timeout, config.solver, config.variant
        (0.1, 30.0, 'local', 'no_cnst')

    TESTS::

        >>> RunConfig(move_budget_fraction=1.5)
        Traceback (most recent call last):
        ...
        sptlb.errors.ValidationError: move_budget_fraction: must be in [0, 1] but is 1.5
        >>> RunConfig(timeout=0)
        Traceback (most recent call last):
        ...
        sptlb.errors.ValidationError: timeout: must be positive but is 0
        >>> RunConfig(solver="anneal")
        Traceback (most recent call last):
        ...
        sptlb.errors.ValidationError: solver: must be one of local, optimal, greedy_cpu, greedy_mem, greedy_tasks but is 'anneal'

    """
    move_budget_fraction: float = .1
    timeout: float = 30.
    solver: str = "local"
    variant: str = "no_cnst"
    region_overlap_threshold: float = .5
    seed: int = 0
    max_hierarchy_iterations: int = 20
    manual_latency_threshold_ms: int = None
    criticality_threshold: float = None
    goal_priorities: tuple = GOALS
    latency_radius_ms: float = 30.
    slot_cost: str = "apps"
    strict: bool = False
    cdf_mode: str = "pooled"

    def __post_init__(self):
        def check(condition, name, message):
            if not condition:
                raise ValidationError(name, f"{message} but is {getattr(self, name)!r}")

        check(0 <= self.move_budget_fraction <= 1, "move_budget_fraction", "must be in [0, 1]")
        check(self.timeout > 0, "timeout", "must be positive")
        object.__setattr__(self, "timeout", float(self.timeout))
        check(self.solver in SOLVERS, "solver", f"must be one of {', '.join(SOLVERS)}")
        check(self.variant in VARIANTS, "variant", f"must be one of {', '.join(VARIANTS)}")
        check(0 <= self.region_overlap_threshold <= 1, "region_overlap_threshold", "must be in [0, 1]")
        check(int(self.max_hierarchy_iterations) >= 1, "max_hierarchy_iterations", "must be at least 1")
        check(self.criticality_threshold is None or self.criticality_threshold >= 0, "criticality_threshold", "must be non-negative")
        object.__setattr__(self, "goal_priorities", tuple(self.goal_priorities))
        check(sorted(self.goal_priorities) == sorted(GOALS), "goal_priorities", f"must be an ordering of {', '.join(GOALS)}")
        check(self.latency_radius_ms >= 0, "latency_radius_ms", "must be non-negative")
        check(self.slot_cost in SLOT_COSTS, "slot_cost", f"must be one of {', '.join(SLOT_COSTS)}")
        check(self.cdf_mode in CDF_MODES, "cdf_mode", f"must be one of {', '.join(CDF_MODES)}")


class Constraint(enum.Enum):
    CAPACITY = "C1"
    TASK_LIMIT = "C2"
    MOVEMENT = "C3"
    PLACEMENT = "C4"
    TRANSITION = "C5"


@dataclass(frozen=True)
class Violation:
    r"""
    A constraint that a mapping violates, with the ids involved.

    The ``magnitude`` measures how badly the constraint is violated: the
    capacity overshoot relative to capacity for C1 and C2, the number of
    excess moves for C3 and one per misplaced app for C4 and C5.
    """
    constraint: Constraint
    ids: tuple
    message: str
    magnitude: float = 1.

    def __str__(self):
        return f"{self.constraint.value}: {self.message}"


@dataclass(frozen=True)
class Feasibility:
    r"""
    The outcome of :func:`is_feasible`; truthy iff there are no violations.
    """
    violations: tuple = ()

    @property
    def feasible(self):
        return not self.violations

    def __bool__(self):
        return self.feasible

    @property
    def magnitude(self):
        return sum(violation.magnitude for violation in self.violations)

    def constraints(self):
        return sorted({violation.constraint.value for violation in self.violations})


@dataclass(frozen=True)
class Problem:
    r"""
    A snapshot together with everything that restricts or ranks mappings.

    Problems are immutable; :func:`add_avoid` returns a new problem.

    TESTS::

        >>> from sptlb.testing import two_tier_snapshot
        >>> from sptlb.problem import Problem
        >>> Problem(two_tier_snapshot(), move_budget=4)
        Traceback (most recent call last):
        ...
        sptlb.errors.ValidationError: move_budget: must be in [0, 3] but is 4
        >>> Problem(two_tier_snapshot(), move_budget=1, avoid={("a40", "t7")})
        Traceback (most recent call last):
        ...
        sptlb.errors.UnknownIdError: unknown tier 't7'

    """
    snapshot: object
    move_budget: int
    avoid: frozenset = frozenset()
    allowed_transitions: frozenset = None
    criticality_high_threshold: float = 0.
    goal_priorities: tuple = GOALS
    enforce_slo: bool = True
    variant: str = "no_cnst"

    def __post_init__(self):
        if not 0 <= self.move_budget <= len(self.snapshot.apps):
            raise ValidationError("move_budget", f"must be in [0, {len(self.snapshot.apps)}] but is {self.move_budget!r}")
        object.__setattr__(self, "avoid", frozenset(self.avoid))
        for app_id, tier_id in self.avoid:
            self.snapshot.app(app_id)
            self.snapshot.tier(tier_id)
        if self.allowed_transitions is not None:
            object.__setattr__(self, "allowed_transitions", frozenset(self.allowed_transitions))
        object.__setattr__(self, "goal_priorities", tuple(self.goal_priorities))
        if sorted(self.goal_priorities) != sorted(GOALS):
            raise ValidationError("goal_priorities", f"must be an ordering of {', '.join(GOALS)}")

    def placement_allowed(self, app, tier_id):
        r"""
        Return whether C4 permits ``app`` on the tier ``tier_id``.
        """
        if (app.app_id, tier_id) in self.avoid:
            return False
        return not self.enforce_slo or self.snapshot.tier(tier_id).supports(app.slo_score)

    def transition_allowed(self, source, dest):
        r"""
        Return whether C5 permits moving apps from tier ``source`` to ``dest``.
        """
        return source == dest or self.allowed_transitions is None or (source, dest) in self.allowed_transitions

    def can_host(self, app, tier_id):
        r"""
        Return whether ``app`` may end up on ``tier_id`` as far as C4 and C5
        are concerned.
        """
        return self.placement_allowed(app, tier_id) and self.transition_allowed(app.current_tier, tier_id)

    def destinations(self, app):
        r"""
        Return the tiers that ``app`` could move to, in snapshot order.
        """
        return [tier.tier_id for tier in self.snapshot.tiers if tier.tier_id != app.current_tier and self.can_host(app, tier.tier_id)]


def overlap(source, dest):
    r"""
    Return the fraction of the regions of tier ``source`` that the tier
    ``dest`` also has hosts in.

    EXAMPLES::

        >>> from sptlb.model import TierSpec
        >>> from sptlb.problem import overlap
        >>> def tier(name, *regions):
        ...     return TierSpec(name, 1, 1, 1, supported_slos=[1], regions={region: 1 for region in regions})
        >>> A, B, C = tier("A", "r1", "r2", "r3"), tier("B", "r1", "r2", "r4"), tier("C", "r3", "r4")
        >>> overlap(A, B), overlap(A, C), overlap(C, A)
        (0.6666666666666666, 0.3333333333333333, 0.5)
        >>> overlap(A, tier("D", "r4", "r5"))
        0.0

    """
    regions = set(source.regions)
    return len(regions & set(dest.regions)) / len(regions)


def compile_problem(snapshot, config):
    r"""
    Compile ``snapshot`` and the run ``config`` into a :class:`Problem`.

    EXAMPLES:

    The movement budget is a fraction of all apps, rounded down::

        >>> from sptlb.testing import random_snapshot, uniform_snapshot
        >>> from sptlb.problem import RunConfig, compile_problem
        >>> snapshot = uniform_snapshot(tiers=5, apps=100)
        >>> compile_problem(snapshot, RunConfig()).move_budget
        10
        >>> compile_problem(snapshot, RunConfig(move_budget_fraction=0)).move_budget
        0
        >>> compile_problem(uniform_snapshot(tiers=2, apps=29), RunConfig(move_budget_fraction=.1)).move_budget
        2

    With region constraints, a transition is allowed if more than half of the
    source tier's regions overlap with the destination::

        >>> from sptlb.model import Snapshot, TierSpec
        >>> def tier(name, *regions):
        ...     return TierSpec(name, 1, 1, 1, supported_slos=[1], regions={region: 1 for region in regions})
        >>> snapshot = Snapshot([tier("A", "r1", "r2", "r3"), tier("B", "r1", "r2", "r4"), tier("C", "r4", "r5")])
        >>> problem = compile_problem(snapshot, RunConfig(variant="w_cnst"))
        >>> sorted(problem.allowed_transitions)
        [('A', 'B'), ('B', 'A')]
        >>> compile_problem(snapshot, RunConfig()).allowed_transitions is None
        True

    "High" criticality is relative to the other apps; by default it means
    above the median::

        >>> compile_problem(uniform_snapshot(tiers=2, apps=5), RunConfig()).criticality_high_threshold
        2.0
        >>> compile_problem(uniform_snapshot(tiers=2, apps=5), RunConfig(criticality_threshold=3.5)).criticality_high_threshold
        3.5

    """
    count = len(snapshot.apps)
    move_budget = min(count, math.floor(config.move_budget_fraction * count + 1e-9))

    allowed_transitions = None
    if config.variant == "w_cnst":
        allowed_transitions = frozenset(
            (source.tier_id, dest.tier_id)
            for source in snapshot.tiers for dest in snapshot.tiers
            if source is not dest and overlap(source, dest) > config.region_overlap_threshold)

    threshold = config.criticality_threshold
    if threshold is None:
        threshold = float(numpy.median([app.criticality_score for app in snapshot.apps])) if snapshot.apps else 0.

    problem = Problem(
        snapshot=snapshot,
        move_budget=move_budget,
        allowed_transitions=allowed_transitions,
        criticality_high_threshold=threshold,
        goal_priorities=config.goal_priorities,
        variant=config.variant)

    logger.info("compiled problem with %d apps on %d tiers, move budget %d, variant %s", count, len(snapshot.tiers), move_budget, config.variant)
    return problem


def add_avoid(problem, app_id, tier_id):
    r"""
    Return a copy of ``problem`` that forbids placing ``app_id`` on ``tier_id``.

    EXAMPLES::

        >>> from sptlb.testing import two_tier_snapshot
        >>> from sptlb.problem import RunConfig, compile_problem, add_avoid, is_feasible
        >>> snapshot = two_tier_snapshot()
        >>> problem = compile_problem(snapshot, RunConfig(move_budget_fraction=1))
        >>> mapping = {**snapshot.identity(), "a40": "t2"}
        >>> bool(is_feasible(problem, mapping))
        True
        >>> avoiding = add_avoid(problem, "a40", "t2")
        >>> is_feasible(avoiding, mapping).constraints()
        ['C4']

    Adding a pair is idempotent and never changes the original::

        >>> len(add_avoid(avoiding, "a40", "t2").avoid), len(problem.avoid)
        (1, 0)

    TESTS::

        >>> add_avoid(problem, "a40", "t3")
        Traceback (most recent call last):
        ...
        sptlb.errors.UnknownIdError: unknown tier 't3'

    """
    problem.snapshot.app(app_id)
    problem.snapshot.tier(tier_id)
    return replace(problem, avoid=problem.avoid | {(app_id, tier_id)})


def is_feasible(problem, mapping):
    r"""
    Check ``mapping`` against all constraints of ``problem``.

    Returns a :class:`Feasibility` that is truthy iff no constraint is
    violated and lists each violated constraint with the ids involved.

    EXAMPLES:

    Moving more apps than the budget allows violates C3::

        >>> from sptlb.testing import uniform_snapshot
        >>> from sptlb.problem import RunConfig, compile_problem, is_feasible
        >>> snapshot = uniform_snapshot(tiers=2, apps=100)
        >>> problem = compile_problem(snapshot, RunConfig())
        >>> moving = [app.app_id for app in snapshot.apps if app.current_tier == "t1"][:11]
        >>> mapping = {**snapshot.identity(), **{app_id: "t2" for app_id in moving}}
        >>> result = is_feasible(problem, mapping)
        >>> result.constraints()
        ['C3']
        >>> print(result.violations[0])
        C3: 11 apps move but the budget is 10

    Placing an app of SLO 4 on tier 1 violates C4::

        >>> from sptlb.testing import slo_snapshot
        >>> snapshot = slo_snapshot()
        >>> problem = compile_problem(snapshot, RunConfig(move_budget_fraction=1))
        >>> result = is_feasible(problem, {**snapshot.identity(), "slo4": "t1"})
        >>> result.constraints()
        ['C4']
        >>> print(result.violations[0])
        C4: app 'slo4' with SLO 4 is not supported by tier 't1'

    Overloading a tier violates C1 and C2::

        >>> from sptlb.testing import two_tier_snapshot
        >>> snapshot = two_tier_snapshot(cpu_capacity=60, task_limit=2)
        >>> problem = compile_problem(snapshot, RunConfig(move_budget_fraction=1))
        >>> [str(violation) for violation in is_feasible(problem, snapshot.identity()).violations]
        ["C1: tier 't1' uses 80.0 cpu of 60.0", "C2: tier 't1' runs 3 tasks of 2"]

    TESTS:

    The verdict agrees with an independent brute-force check::

        >>> import random
        >>> from sptlb.testing import random_snapshot, brute_force_violations
        >>> rnd = random.Random(3)
        >>> for seed in range(60):
        ...     snapshot = random_snapshot(seed)
        ...     config = RunConfig(move_budget_fraction=rnd.choice([0, .2, .5]), variant=rnd.choice(["no_cnst", "w_cnst"]))
        ...     problem = compile_problem(snapshot, config)
        ...     for _ in range(10):
        ...         mapping = {app.app_id: rnd.choice(snapshot.tier_ids) for app in snapshot.apps}
        ...         assert is_feasible(problem, mapping).constraints() == brute_force_violations(problem, mapping), (seed, mapping)

    """
    snapshot = problem.snapshot
    violations = []

    for tier, metrics in zip(snapshot.tiers, project_metrics(snapshot, mapping)):
        for resource in ("cpu", "mem"):
            used, capacity = metrics.used(resource), tier.capacity(resource)
            if used > capacity * (1 + CAPACITY_TOLERANCE):
                violations.append(Violation(Constraint.CAPACITY, (tier.tier_id, resource), f"tier {tier.tier_id!r} uses {used} {resource} of {capacity}", (used - capacity) / capacity))
        if metrics.tasks_used > tier.task_limit:
            violations.append(Violation(Constraint.TASK_LIMIT, (tier.tier_id,), f"tier {tier.tier_id!r} runs {metrics.tasks_used} tasks of {tier.task_limit}", (metrics.tasks_used - tier.task_limit) / tier.task_limit))

    moved = sorted(app.app_id for app in snapshot.apps if mapping[app.app_id] != app.current_tier)
    if len(moved) > problem.move_budget:
        violations.append(Violation(Constraint.MOVEMENT, tuple(moved), f"{len(moved)} apps move but the budget is {problem.move_budget}", len(moved) - problem.move_budget))

    for app in snapshot.apps:
        tier_id = mapping[app.app_id]
        if (app.app_id, tier_id) in problem.avoid:
            violations.append(Violation(Constraint.PLACEMENT, (app.app_id, tier_id), f"app {app.app_id!r} must avoid tier {tier_id!r}"))
        elif problem.enforce_slo and not snapshot.tier(tier_id).supports(app.slo_score):
            violations.append(Violation(Constraint.PLACEMENT, (app.app_id, tier_id), f"app {app.app_id!r} with SLO {app.slo_score} is not supported by tier {tier_id!r}"))
        if not problem.transition_allowed(app.current_tier, tier_id):
            violations.append(Violation(Constraint.TRANSITION, (app.app_id, app.current_tier, tier_id), f"app {app.app_id!r} cannot move from {app.current_tier!r} to {tier_id!r} whose regions do not overlap enough"))

    return Feasibility(tuple(violations))


def over_target(tier, metrics):
    r"""
    Return by how much the utilizations in ``metrics`` exceed the targets of
    ``tier``, summed over cpu, memory and tasks.

    EXAMPLES::

        >>> from sptlb.model import TierSpec, TierMetrics
        >>> from sptlb.problem import over_target
        >>> tier = TierSpec("t1", 100, 100, 100, supported_slos=[1], regions={"r1": 1})
        >>> round(over_target(tier, TierMetrics("t1", 75, 50, 10, 1, cpu_util=.75, mem_util=.5, task_util=.1)), 9)
        0.05

    """
    return sum(max(0., metrics.util(resource) - tier.target(resource)) for resource in RESOURCES)


def score(problem, mapping):
    r"""
    Return the goal scores of ``mapping``.

    Infeasible mappings can be scored, the result is then flagged as not
    ``feasible``.

    EXAMPLES:

    The identity mapping never pays for moves::

        >>> from sptlb.testing import two_tier_snapshot
        >>> from sptlb.problem import RunConfig, compile_problem, score
        >>> snapshot = two_tier_snapshot()
        >>> problem = compile_problem(snapshot, RunConfig(move_budget_fraction=1))
        >>> initial = score(problem, snapshot.identity())
        >>> initial.g8_movement_cost, initial.g9_critical_moves
        (0, 0.0)
        >>> round(initial.g5_over_target, 9), initial.g6_resource_imbalance
        (0.1, 0.8)

    Movement cost counts the tasks of moved apps, critical moves count the
    criticality of moved apps above the threshold::

        >>> from sptlb.testing import three_app_snapshot
        >>> snapshot = three_app_snapshot()
        >>> problem = compile_problem(snapshot, RunConfig(move_budget_fraction=1))
        >>> [(app.app_id, app.task_count, app.criticality_score) for app in snapshot.apps]
        [('x', 5, 1.0), ('y', 7, 9.0), ('z', 3, 4.0)]
        >>> problem.criticality_high_threshold
        4.0
        >>> moved = score(problem, {"x": "t2", "y": "t2", "z": "t1"})
        >>> moved.g8_movement_cost, moved.g9_critical_moves
        (12, 9.0)
        >>> moved.g8_movement_cost == sum(app.task_count for app in snapshot.apps if app.app_id in ("x", "y"))
        True

    """
    snapshot = problem.snapshot
    metrics = project_metrics(snapshot, mapping)

    g8 = 0
    g9 = 0.
    for app in snapshot.apps:
        if mapping[app.app_id] != app.current_tier:
            g8 += app.task_count
            if app.criticality_score > problem.criticality_high_threshold:
                g9 += app.criticality_score

    return ScoreVector(
        g5_over_target=sum(over_target(tier, m) for tier, m in zip(snapshot.tiers, metrics)),
        g6_resource_imbalance=imbalance(metrics, "cpu") + imbalance(metrics, "mem"),
        g7_task_imbalance=imbalance(metrics, "tasks"),
        g8_movement_cost=g8,
        g9_critical_moves=g9,
        feasible=is_feasible(problem, mapping).feasible)
