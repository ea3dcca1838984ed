r"""
Local search over single-app relocations.

Starting from the current placement, the search first repairs hard
constraint violations (if the cluster is already overloaded) and then
repeatedly takes the best strictly improving relocation until none is left.
It can get stuck in local minima.

EXAMPLES:

All apps start on the first of two equal tiers; the search moves the
largest one over and thereby balances cpu perfectly::

    >>> from sptlb.testing import two_tier_snapshot
    >>> from sptlb.model import imbalance
    >>> from sptlb.problem import RunConfig, compile_problem
    >>> from sptlb.solvers.local import solve_local
    >>> config = RunConfig(move_budget_fraction=1)
    >>> solution = solve_local(compile_problem(two_tier_snapshot(), config), config)
    >>> solution.moves
    (Move(app_id='a40', source='t1', dest='t2'),)
    >>> imbalance(solution.projected, "cpu")
    0.0
    >>> solution.terminated_by
    'converged'

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

from ..errors import Infeasible
from ..problem import is_feasible
from ..problem.order import compare_keys
from ..util import Deadline, derive_rng
from . import make_solution
from .state import SearchState

logger = logging.getLogger(__name__)

# How many candidates to evaluate between two polls of the deadline.
POLL = 256

EPSILON = 1e-12


def solve_local(problem, config, deadline=None):
    r"""
    Return a locally optimal solution of ``problem``.

    The ``config.seed`` decides the order in which neighbors are enumerated
    and thereby which of several equally good relocations is taken.

    Raises :class:`sptlb.errors.Infeasible` carrying the best-effort mapping
    if the hard constraints cannot be repaired within the move budget.

    EXAMPLES:

    A balanced cluster stays as it is::

        >>> from sptlb.testing import uniform_snapshot
        >>> from sptlb.problem import RunConfig, compile_problem
        >>> from sptlb.solvers.local import solve_local
        >>> config = RunConfig()
        >>> solution = solve_local(compile_problem(uniform_snapshot(tiers=4, apps=40), config), config)
        >>> solution.moves, solution.terminated_by
        ((), 'converged')

    An overloaded tier is repaired first::

        >>> from sptlb.testing import two_tier_snapshot
        >>> config = RunConfig(move_budget_fraction=1)
        >>> solution = solve_local(compile_problem(two_tier_snapshot(cpu_capacity=60), config), config)
        >>> solution.feasible, [m.cpu_used for m in solution.projected]
        (True, [40.0, 40.0])

    If the budget does not suffice, the solver gives up::

        >>> config = RunConfig(move_budget_fraction=0)
        >>> solve_local(compile_problem(two_tier_snapshot(cpu_capacity=60), config), config)
        Traceback (most recent call last):
        ...
        sptlb.errors.Infeasible: unsatisfiable within budget: C1: tier 't1' uses 80.0 cpu of 60.0

    TESTS:

    A hot tier gets relieved; both balance goals improve::

        >>> from sptlb.testing import hot_tier_snapshot
        >>> from sptlb.problem import score
        >>> snapshot = hot_tier_snapshot()
        >>> config = RunConfig()
        >>> problem = compile_problem(snapshot, config)
        >>> initial = score(problem, snapshot.identity())
        >>> solution = solve_local(problem, config)
        >>> solution.score.g6_resource_imbalance < initial.g6_resource_imbalance
        True
        >>> solution.score.g7_task_imbalance < initial.g7_task_imbalance
        True
        >>> len(solution.moves) <= problem.move_budget
        True

    Solutions are feasible, within budget and reproducible::

        >>> from sptlb.testing import random_snapshot, brute_force_violations
        >>> from sptlb.errors import Infeasible
        >>> for seed in range(40):
        ...     snapshot = random_snapshot(seed)
        ...     config = RunConfig(move_budget_fraction=.5, seed=seed, variant="w_cnst" if seed % 2 else "no_cnst")
        ...     problem = compile_problem(snapshot, config)
        ...     try:
        ...         solution = solve_local(problem, config)
        ...     except Infeasible as e:
        ...         assert not e.best_effort.feasible
        ...         continue
        ...     assert brute_force_violations(problem, solution.mapping) == []
        ...     assert len(solution.moves) <= problem.move_budget
        ...     assert solve_local(problem, config).mapping == solution.mapping

    """
    deadline = deadline or Deadline(config.timeout)
    state = SearchState(problem)
    rng = derive_rng(config.seed, "local")
    order = [int(a) for a in rng.permutation(len(state.apps))]
    scans = 0
    terminated_by = "converged"

    def finish(terminated_by):
        return make_solution(problem, state.mapping(), "local", elapsed=deadline.elapsed(), iterations=scans, terminated_by=terminated_by, evaluations=state.evaluations)

    violation = state.violation()
    if violation > 0:
        logger.info("current placement violates hard constraints (magnitude %g), repairing first", violation)
    while violation > 0:
        if deadline.expired():
            terminated_by = "timeout"
            break
        scans += 1
        best, best_violation, best_key = None, violation - EPSILON, None
        for a in order:
            for t in range(state.tier_count):
                if t == state.assign[a] or state.moved_after(a, t) > state.budget:
                    continue
                after = state.violation(a, t)
                if after < best_violation - EPSILON:
                    best, best_violation, best_key = (a, t), after, None
                elif best is not None and abs(after - best_violation) <= EPSILON:
                    # Equal repair, prefer the better score.
                    if best_key is None:
                        best_key = state.key_after(*best)
                    key = state.key_after(a, t)
                    if compare_keys(key, best_key) < 0:
                        best, best_key = (a, t), key
        if best is None:
            break
        state.apply(*best)
        logger.debug("repair: moved %s to %s, violation %g -> %g", state.apps[best[0]].app_id, state.tiers[best[1]].tier_id, violation, best_violation)
        violation = state.violation()

    if violation > 0:
        solution = finish(terminated_by)
        violations = solution.violations or is_feasible(problem, solution.mapping).violations
        raise Infeasible("unsatisfiable within budget: " + "; ".join(str(v) for v in violations), best_effort=solution, violations=violations)

    current = state.key()
    while True:
        if deadline.expired():
            terminated_by = "timeout"
            break
        scans += 1
        best, best_key = None, current
        blocked = False
        polled = 0
        for a in order:
            for t in state.destinations[a] if state.assign[a] == state.origin[a] else range(state.tier_count):
                if t == state.assign[a] or not state.hostable[a][t] or not state.fits(a, t):
                    continue
                over_budget = state.moved_after(a, t) > state.budget
                if over_budget and blocked:
                    continue
                key = state.key_after(a, t)
                polled += 1
                if compare_keys(key, best_key) < 0:
                    if over_budget:
                        blocked = compare_keys(key, current) < 0
                        continue
                    best, best_key = (a, t), key
            if polled >= POLL:
                polled = 0
                if deadline.expired():
                    terminated_by = "timeout"
                    break
        if best is None:
            if blocked:
                terminated_by = "budget_exhausted"
            break
        state.apply(*best)
        logger.debug("moved %s to %s, score %s", state.apps[best[0]].app_id, state.tiers[best[1]].tier_id, best_key)
        current = best_key
        if terminated_by == "timeout":
            break

    if terminated_by == "timeout":
        logger.warning("local search timed out after %d scans", scans)
    logger.info("local search finished after %d scans with %d moves (%s)", scans, state.moved, terminated_by)
    return finish(terminated_by)
