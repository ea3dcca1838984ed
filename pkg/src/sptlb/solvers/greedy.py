r"""
The greedy baseline that balances a single resource.

Each step takes the tier with the highest load relative to its utilization
target and the tier with the lowest, and moves the largest app that fits
from the former to the latter. Every app moves at most once. Since only one
resource is considered, the other resources are typically left unbalanced.

EXAMPLES::

    >>> from sptlb.testing import two_tier_snapshot
    >>> from sptlb.problem import RunConfig, compile_problem
    >>> from sptlb.solvers.greedy import solve_greedy
    >>> config = RunConfig(move_budget_fraction=1)
    >>> solution = solve_greedy(compile_problem(two_tier_snapshot(), config), "cpu", config)
    >>> solution.moves
    (Move(app_id='a40', source='t1', dest='t2'),)
    >>> solution.solver_name
    'greedy_cpu'

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
from dataclasses import replace

from ..problem.order import TOLERANCE
from ..util import Deadline
from . import make_solution
from .state import SearchState, CPU, MEM, TASKS

logger = logging.getLogger(__name__)

OBJECTIVES = {"cpu": CPU, "mem": MEM, "tasks": TASKS}


def solve_greedy(problem, objective, config, raw=False, deadline=None):
    r"""
    Return the mapping the greedy baseline produces for the resource
    ``objective``, one of ``cpu``, ``mem`` and ``tasks``.

    The baseline honors capacities, the movement budget, avoid pairs and
    region transitions. With ``raw``, it ignores which SLOs tiers support;
    its result then lists the resulting violations and is not
    :attr:`sptlb.solvers.Solution.feasible`.

    Unlike the other solvers, this never raises on infeasibility; a result
    that violates constraints, e.g., because the initial placement was
    already overloaded, carries its ``violations``.

    EXAMPLES:

    Nothing moves when the tiers are loaded equally::

        >>> from sptlb.testing import uniform_snapshot
        >>> from sptlb.problem import RunConfig, compile_problem
        >>> from sptlb.solvers.greedy import solve_greedy
        >>> config = RunConfig()
        >>> solution = solve_greedy(compile_problem(uniform_snapshot(tiers=4, apps=40), config), "tasks", config)
        >>> solution.moves, solution.terminated_by
        ((), 'converged')

    A single movable app goes from the hot to the cold tier::

        >>> from sptlb.model import AppRecord, Snapshot, TierSpec
        >>> tiers = [TierSpec(f"t{i}", 100, 100, 100, supported_slos=[1], regions={"r1": 1}) for i in (1, 2)]
        >>> app = lambda name, cpu, tier: AppRecord(name, cpu, 0, 1, 1, 0, "r1", tier)
        >>> snapshot = Snapshot(tiers, [app("a", 90, "t1"), app("b", 10, "t2")])
        >>> config = RunConfig(move_budget_fraction=.5)
        >>> solve_greedy(compile_problem(snapshot, config), "cpu", config).moves
        (Move(app_id='a', source='t1', dest='t2'),)

    Balancing cpu alone can leave memory worse than it was::

        >>> from sptlb.testing import adversarial_snapshot
        >>> from sptlb.model import imbalance
        >>> snapshot = adversarial_snapshot()
        >>> config = RunConfig()
        >>> problem = compile_problem(snapshot, config)
        >>> solution = solve_greedy(problem, "cpu", config)
        >>> from sptlb.model import project_metrics
        >>> initial = project_metrics(snapshot, snapshot.identity())
        >>> imbalance(solution.projected, "cpu") < imbalance(initial, "cpu")
        True
        >>> imbalance(solution.projected, "mem") >= imbalance(initial, "mem")
        True

    The raw variant may put apps on tiers that do not support their SLO::

        >>> from sptlb.testing import slo_snapshot
        >>> snapshot = slo_snapshot()
        >>> config = RunConfig(move_budget_fraction=1)
        >>> problem = compile_problem(snapshot, config)
        >>> solve_greedy(problem, "cpu", config).feasible
        True
        >>> raw = solve_greedy(problem, "cpu", config, raw=True)
        >>> raw.solver_name, sorted({violation.constraint.value for violation in raw.violations})
        ('greedy_cpu_raw', ['C4'])

    TESTS:

    Results respect the budget and, starting from a valid placement, all
    constraints::

        >>> from sptlb.testing import random_snapshot, brute_force_violations
        >>> from sptlb.problem import is_feasible
        >>> for seed in range(40):
        ...     snapshot = random_snapshot(seed)
        ...     config = RunConfig(move_budget_fraction=.4, variant="w_cnst" if seed % 3 else "no_cnst")
        ...     problem = compile_problem(snapshot, config)
        ...     for objective in ("cpu", "mem", "tasks"):
        ...         solution = solve_greedy(problem, objective, config)
        ...         assert len(solution.moves) <= problem.move_budget
        ...         if is_feasible(problem, snapshot.identity()):
        ...             assert solution.feasible and brute_force_violations(problem, solution.mapping) == []
        ...         assert solve_greedy(problem, objective, config).mapping == solution.mapping

    """
    if objective not in OBJECTIVES:
        raise ValueError(f"unknown objective {objective!r}, must be one of {', '.join(OBJECTIVES)}")
    r = OBJECTIVES[objective]
    name = f"greedy_{objective}" + ("_raw" if raw else "")

    deadline = deadline or Deadline(config.timeout)
    original = problem
    if raw:
        problem = replace(problem, enforce_slo=False)

    state = SearchState(problem)
    moved = set()
    steps = 0
    terminated_by = "converged"

    capacity, target = state.capacity[r], state.target[r]

    def load(t):
        return state.used[r][t] / (capacity[t] * target[t])

    by_id = sorted(range(state.tier_count), key=lambda t: state.tiers[t].tier_id)

    while True:
        if state.moved >= problem.move_budget:
            terminated_by = "budget_exhausted" if problem.move_budget else "converged"
            break
        if deadline.expired():
            terminated_by = "timeout"
            logger.warning("%s timed out after %d steps", name, steps)
            break
        steps += 1

        loads = [load(t) for t in range(state.tier_count)]
        highest = max(by_id, key=lambda t: loads[t])
        lowest = min(by_id, key=lambda t: loads[t])
        if loads[highest] - loads[lowest] <= TOLERANCE:
            break

        candidates = sorted((a for a in range(len(state.apps)) if state.assign[a] == highest and a not in moved), key=lambda a: (-state.demand[r][a], state.apps[a].app_id))
        for a in candidates:
            state.evaluations += 1
            if state.hostable[a][lowest] and state.fits(a, lowest):
                state.apply(a, lowest)
                moved.add(a)
                logger.debug("%s: moved %s from %s to %s", name, state.apps[a].app_id, state.tiers[highest].tier_id, state.tiers[lowest].tier_id)
                break
        else:
            break

    solution = make_solution(original, state.mapping(), name, elapsed=deadline.elapsed(), iterations=steps, terminated_by=terminated_by, evaluations=state.evaluations)
    if not solution.feasible:
        logger.warning("%s returns a mapping that violates %s", name, ", ".join(sorted({violation.constraint.value for violation in solution.violations})))
    logger.info("%s finished after %d steps with %d moves (%s)", name, steps, len(solution.moves), terminated_by)
    return solution
