r"""
Exact lexicographic optimization by branch and bound.

The search enumerates the sets of moved apps in increasing order of their
position in a fixed list, every node of the search tree being a complete
mapping where the apps chosen so far have been relocated and all others stay
where they are. A subtree is cut when relaxed per-tier bounds on the
resources used show that no mapping in it can beat the best mapping found so
far.

Among mappings with equal scores, the one moving fewer apps wins, then the
one whose sorted moved app ids come first.

EXAMPLES::

    >>> from sptlb.testing import three_app_snapshot
    >>> from sptlb.problem import RunConfig, compile_problem
    >>> from sptlb.solvers.optimal import solve_optimal
    >>> config = RunConfig(move_budget_fraction=1, solver="optimal")
    >>> solution = solve_optimal(compile_problem(three_app_snapshot(), config), config)
    >>> solution.terminated_by, solution.feasible
    ('converged', True)

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
from ..problem import CAPACITY_TOLERANCE, is_feasible
from ..problem.order import GOALS, compare_keys
from ..util import Deadline
from . import make_solution
from .state import SearchState, CPU, MEM, TASKS

logger = logging.getLogger(__name__)

# How many nodes to visit between two polls of the deadline.
POLL = 1024


class _Timeout(Exception):
    pass


class _Incumbent:
    r"""
    The best mapping found so far.
    """

    def __init__(self):
        self.key = None
        self.moved = None
        self.moved_ids = None
        self.mapping = None
        self.source = None

    def offer(self, key, moved_ids, mapping, source):
        r"""
        Replace the incumbent if ``key`` is better, or equally good but
        moving fewer apps. Return whether it was replaced.
        """
        if self.key is not None:
            verdict = compare_keys(key, self.key)
            if verdict > 0:
                return False
            if verdict == 0 and (len(moved_ids), moved_ids) >= (self.moved, self.moved_ids):
                return False
        self.key, self.moved, self.moved_ids, self.mapping, self.source = key, len(moved_ids), moved_ids, mapping, source
        return True


def _warm_start(problem, config, deadline, incumbent):
    r"""
    Seed ``incumbent`` with the identity and the results of the heuristic
    solvers so that bounding is effective from the first node.
    """
    from .greedy import solve_greedy
    from .local import solve_local

    order = problem.goal_priorities
    identity = problem.snapshot.identity()
    if is_feasible(problem, identity):
        state = SearchState(problem)
        incumbent.offer(state.key(), [], identity, "identity")

    candidates = []
    try:
        candidates.append(solve_local(problem, config, deadline=deadline.nested(deadline.remaining() / 4)))
    except Infeasible:
        pass
    for objective in ("cpu", "mem", "tasks"):
        candidates.append(solve_greedy(problem, objective, config, deadline=deadline.nested(deadline.remaining() / 8)))

    for candidate in candidates:
        if candidate.feasible:
            incumbent.offer(candidate.score.key(order), candidate.moved_ids(), candidate.mapping, candidate.solver_name)


class _Bounds:
    r"""
    Lower bounds on the score of every mapping that extends a node by moving
    further apps from the tail of the branching order.
    """

    def __init__(self, state, movable):
        self.state = state
        self.movable = movable
        order = state.problem.goal_priorities
        self._order = [GOALS.index(goal) for goal in order]
        # misplaced_after[i]: apps at position i or later that violate C4 or C5 where they are now
        self.misplaced_after = [0] * (len(movable) + 1)
        for i in range(len(movable) - 1, -1, -1):
            a = movable[i]
            self.misplaced_after[i] = self.misplaced_after[i + 1] + (not state.hostable[a][state.origin[a]])

    def _top(self, values, count):
        if count <= 0 or not values:
            return 0
        return sum(sorted(values, reverse=True)[:count])

    def prune(self, start, remaining, incumbent):
        r"""
        Return whether no extension of the current mapping that moves at
        most ``remaining`` of the apps at ``start`` or later can replace
        ``incumbent``.
        """
        state = self.state
        if state.misplaced > self.misplaced_after[start] or self.misplaced_after[start] > remaining:
            return True

        free = self.movable[start:]
        over = 0.
        spans = [0., 0., 0.]
        for r in (CPU, MEM, TASKS):
            demand = state.demand[r]
            high, low = 0., None
            for t in range(state.tier_count):
                leaving = self._top([demand[a] for a in free if state.assign[a] == t], remaining)
                arriving = self._top([demand[a] for a in free if state.hostable[a][t] and state.assign[a] != t], remaining)
                capacity = state.capacity[r][t]
                lo = max(0, state.used[r][t] - leaving)
                hi = state.used[r][t] + arriving
                slack = 1 + CAPACITY_TOLERANCE if r != TASKS else 1
                if lo > capacity * slack:
                    return True
                util = lo / capacity
                if util > state.target[r][t]:
                    over += util - state.target[r][t]
                high = max(high, util)
                low = hi / capacity if low is None else min(low, hi / capacity)
            spans[r] = max(0., high - low)

        if incumbent.key is None:
            return False

        bound = tuple((over, spans[CPU] + spans[MEM], spans[TASKS], state.cost, state.critical_cost)[i] for i in self._order)
        verdict = compare_keys(bound, incumbent.key)
        return verdict > 0 or (verdict == 0 and incumbent.moved <= state.moved)


def solve_optimal(problem, config, deadline=None):
    r"""
    Return a mapping of ``problem`` that no other feasible mapping beats,
    or the best mapping found when ``config.timeout`` expires.

    Raises :class:`sptlb.errors.Infeasible` if no feasible mapping exists.

    EXAMPLES:

    Without a movement budget, only the current placement is possible::

        >>> from sptlb.testing import two_tier_snapshot
        >>> from sptlb.problem import RunConfig, compile_problem
        >>> from sptlb.solvers.optimal import solve_optimal
        >>> config = RunConfig(move_budget_fraction=0, solver="optimal")
        >>> solution = solve_optimal(compile_problem(two_tier_snapshot(), config), config)
        >>> solution.moves, solution.terminated_by
        ((), 'converged')

    If the SLOs leave no valid placement, the search fails::

        >>> from sptlb.testing import slo_snapshot
        >>> config = RunConfig(move_budget_fraction=0, solver="optimal")
        >>> snapshot = slo_snapshot()
        >>> problem = compile_problem(snapshot, config)
        >>> from sptlb.problem import add_avoid
        >>> solve_optimal(add_avoid(problem, "slo4", "t4"), config)
        Traceback (most recent call last):
        ...
        sptlb.errors.Infeasible: no feasible mapping within the move budget

    TESTS:

    The result equals the best score found by exhaustive enumeration::

        >>> from sptlb.testing import random_snapshot, brute_force_best
        >>> from sptlb.problem.order import compare
        >>> from sptlb.errors import Infeasible
        >>> for seed in range(30):
        ...     snapshot = random_snapshot(seed)
        ...     config = RunConfig(move_budget_fraction=(.3, .6, 1)[seed % 3], seed=seed, solver="optimal", variant="w_cnst" if seed % 4 == 1 else "no_cnst")
        ...     problem = compile_problem(snapshot, config)
        ...     best = brute_force_best(problem)
        ...     try:
        ...         solution = solve_optimal(problem, config)
        ...     except Infeasible:
        ...         assert best is None, seed
        ...         continue
        ...     assert solution.feasible and len(solution.moves) <= problem.move_budget
        ...     assert compare(solution.score, best, problem.goal_priorities) == 0, (seed, solution.score, best)

    It is never worse than the heuristics::

        >>> from sptlb.solvers.local import solve_local
        >>> from sptlb.solvers.greedy import solve_greedy
        >>> for seed in range(10):
        ...     snapshot = random_snapshot(seed)
        ...     config = RunConfig(move_budget_fraction=.5, seed=seed)
        ...     problem = compile_problem(snapshot, config)
        ...     try:
        ...         optimal = solve_optimal(problem, config)
        ...         local = solve_local(problem, config)
        ...     except Infeasible:
        ...         continue
        ...     assert compare(optimal.score, local.score) <= 0
        ...     for objective in ("cpu", "mem", "tasks"):
        ...         greedy = solve_greedy(problem, objective, config)
        ...         assert not greedy.feasible or compare(optimal.score, greedy.score) <= 0

    """
    deadline = deadline or Deadline(config.timeout)
    incumbent = _Incumbent()
    _warm_start(problem, config, deadline, incumbent)
    if incumbent.key is not None:
        logger.debug("warm start from %s with score %s", incumbent.source, incumbent.key)

    state = SearchState(problem)
    # Branch on large apps first so that bounds tighten quickly.
    movable = sorted((a for a in range(len(state.apps)) if state.destinations[a]), key=lambda a: (-state.demand[CPU][a] - state.demand[MEM][a], state.apps[a].app_id))
    bounds = _Bounds(state, movable)
    nodes = 0

    def visit(start, remaining):
        nonlocal nodes
        nodes += 1
        if nodes % POLL == 0 and deadline.expired():
            raise _Timeout()

        if state.violation() == 0:
            if incumbent.offer(state.key(), state.moved_ids(), None, "optimal"):
                incumbent.mapping = state.mapping()
                logger.debug("new incumbent %s moving %s", incumbent.key, incumbent.moved_ids)

        if remaining == 0 or start == len(movable):
            return
        if bounds.prune(start, remaining, incumbent):
            return

        for i in range(start, len(movable)):
            a = movable[i]
            origin = state.origin[a]
            for t in state.destinations[a]:
                state.apply(a, t)
                visit(i + 1, remaining - 1)
                state.apply(a, origin)

    terminated_by = "converged"
    try:
        visit(0, problem.move_budget)
    except _Timeout:
        terminated_by = "timeout"
        logger.warning("optimal search timed out after %d nodes, returning the best mapping found", nodes)

    if incumbent.key is None:
        raise Infeasible("no feasible mapping within the move budget", best_effort=None, violations=is_feasible(problem, problem.snapshot.identity()).violations)

    logger.info("optimal search visited %d nodes, best mapping moves %d apps (%s)", nodes, incumbent.moved, terminated_by)
    return make_solution(problem, incumbent.mapping, "optimal", elapsed=deadline.elapsed(), iterations=nodes, terminated_by=terminated_by, evaluations=state.evaluations)
