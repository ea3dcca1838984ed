r"""
Incremental bookkeeping of a mapping while a solver explores neighbors.

The state keeps the resources used per tier in plain lists indexed by tier
position so that the score of a single relocation can be evaluated without
recomputing the metrics of all tiers from scratch.

EXAMPLES::

    >>> from sptlb.testing import two_tier_snapshot
    >>> from sptlb.problem import RunConfig, compile_problem, score
    >>> from sptlb.solvers.state import SearchState
    >>> snapshot = two_tier_snapshot()
    >>> problem = compile_problem(snapshot, RunConfig(move_budget_fraction=1))
    >>> state = SearchState(problem)
    >>> state.key() == score(problem, snapshot.identity()).key()
    True

Evaluating a relocation does not change the state, applying it does::

    >>> a40 = state.app_index["a40"]
    >>> after = state.key_after(a40, 1)
    >>> state.apply(a40, 1)
    >>> state.key() == after == score(problem, state.mapping()).key()
    True
    >>> state.moved, state.cost
    (1, 1)

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

import math

from ..problem import CAPACITY_TOLERANCE
from ..problem.order import GOALS

CPU, MEM, TASKS = 0, 1, 2


class SearchState:
    r"""
    A mutable mapping of the apps of ``problem`` to tiers, starting at the
    current placement.
    """

    def __init__(self, problem):
        snapshot = problem.snapshot
        self.problem = problem
        self.tiers = snapshot.tiers
        self.apps = snapshot.apps
        self.tier_count = len(self.tiers)
        self.tier_index = {tier.tier_id: i for i, tier in enumerate(self.tiers)}
        self.app_index = {app.app_id: a for a, app in enumerate(self.apps)}

        self.capacity = [[tier.cpu_capacity for tier in self.tiers], [tier.mem_capacity for tier in self.tiers], [tier.task_limit for tier in self.tiers]]
        self.target = [[tier.util_target_cpu for tier in self.tiers], [tier.util_target_mem for tier in self.tiers], [tier.util_target_tasks for tier in self.tiers]]
        self.demand = [[app.cpu_p99 for app in self.apps], [app.mem_p99 for app in self.apps], [app.task_count for app in self.apps]]
        self.critical = [app.criticality_score if app.criticality_score > problem.criticality_high_threshold else 0. for app in self.apps]

        self.origin = [self.tier_index[app.current_tier] for app in self.apps]
        self.assign = list(self.origin)

        # hostable[a][t]: whether C4 and C5 allow app a on tier t
        self.hostable = [[problem.placement_allowed(app, tier.tier_id) and problem.transition_allowed(app.current_tier, tier.tier_id) for tier in self.tiers] for app in self.apps]
        self.destinations = [[t for t in range(self.tier_count) if t != self.origin[a] and self.hostable[a][t]] for a in range(len(self.apps))]

        self.used = [[0.] * self.tier_count, [0.] * self.tier_count, [0] * self.tier_count]
        for a in range(len(self.apps)):
            for r in (CPU, MEM, TASKS):
                self.used[r][self.origin[a]] += self.demand[r][a]

        self.moved = 0
        self.cost = 0
        self.critical_cost = 0.
        self.misplaced = sum(1 for a in range(len(self.apps)) if not self.hostable[a][self.origin[a]])
        self.evaluations = 0

        self._order = [GOALS.index(goal) for goal in problem.goal_priorities]

    @property
    def budget(self):
        return self.problem.move_budget

    def mapping(self):
        return {app.app_id: self.tiers[self.assign[a]].tier_id for a, app in enumerate(self.apps)}

    def load(self, mapping):
        r"""
        Move every app to the tier ``mapping`` assigns it to.
        """
        for app_id, tier_id in mapping.items():
            a, t = self.app_index[app_id], self.tier_index[tier_id]
            if self.assign[a] != t:
                self.apply(a, t)

    def moved_ids(self):
        return sorted(self.apps[a].app_id for a in range(len(self.apps)) if self.assign[a] != self.origin[a])

    def _delta(self, a, t):
        r"""
        Return the change of the number of moved apps if ``a`` goes to ``t``.
        """
        origin = self.origin[a]
        if self.assign[a] == origin:
            return 0 if t == origin else 1
        return -1 if t == origin else 0

    def moved_after(self, a, t):
        return self.moved + self._delta(a, t)

    def fits(self, a, t):
        r"""
        Return whether tier ``t`` has room for app ``a`` (C1, C2).
        """
        for r in (CPU, MEM):
            if self.used[r][t] + self.demand[r][a] > self.capacity[r][t] * (1 + CAPACITY_TOLERANCE):
                return False
        return self.used[TASKS][t] + self.demand[TASKS][a] <= self.capacity[TASKS][t]

    def apply(self, a, t):
        s = self.assign[a]
        if s == t:
            return
        delta = self._delta(a, t)
        self.moved += delta
        self.cost += delta * self.demand[TASKS][a]
        self.critical_cost += delta * self.critical[a]
        if self.moved == 0:
            # Avoid drift of the float accumulator on the identity.
            self.critical_cost = 0.
        self.misplaced += (not self.hostable[a][t]) - (not self.hostable[a][s])
        for r in (CPU, MEM, TASKS):
            d = self.demand[r][a]
            self.used[r][s] -= d
            self.used[r][t] += d
        self.assign[a] = t

    def _balance(self, a=None, t=None):
        r"""
        Return the over target sum, the cpu plus memory utilization spread
        and the task utilization spread, optionally after relocating ``a`` to
        ``t``.
        """
        s = -1 if a is None else self.assign[a]
        over = 0.
        spans = [0., 0., 0.]
        for r in (CPU, MEM, TASKS):
            used, capacity, target = self.used[r], self.capacity[r], self.target[r]
            d = 0 if a is None else self.demand[r][a]
            high, low = -math.inf, math.inf
            for i in range(self.tier_count):
                u = used[i]
                if i == s:
                    u -= d
                if i == t:
                    u += d
                util = u / capacity[i]
                if util > target[i]:
                    over += util - target[i]
                if util > high:
                    high = util
                if util < low:
                    low = util
            spans[r] = high - low
        return over, spans[CPU] + spans[MEM], spans[TASKS]

    def _key(self, values):
        return tuple(values[i] for i in self._order)

    def key(self):
        r"""
        Return the score of the current mapping in priority order.
        """
        self.evaluations += 1
        return self._key(self._balance() + (self.cost, self.critical_cost))

    def key_after(self, a, t):
        r"""
        Return the score in priority order if ``a`` were relocated to ``t``.
        """
        self.evaluations += 1
        delta = self._delta(a, t)
        critical = self.critical_cost + delta * self.critical[a] if self.moved + delta else 0.
        return self._key(self._balance(a, t) + (self.cost + delta * self.demand[TASKS][a], critical))

    def violation(self, a=None, t=None):
        r"""
        Return the total magnitude of hard constraint violations, optionally
        after relocating ``a`` to ``t``.

        The magnitude adds capacity overshoot relative to capacity, excess
        moves and misplaced apps.
        """
        s = -1 if a is None else self.assign[a]
        total = 0.
        for r in (CPU, MEM, TASKS):
            used, capacity = self.used[r], self.capacity[r]
            d = 0 if a is None else self.demand[r][a]
            slack = 1 + CAPACITY_TOLERANCE if r != TASKS else 1
            for i in range(self.tier_count):
                u = used[i]
                if i == s:
                    u -= d
                if i == t:
                    u += d
                if u > capacity[i] * slack:
                    total += (u - capacity[i]) / capacity[i]
        moved, misplaced = self.moved, self.misplaced
        if a is not None:
            moved += self._delta(a, t)
            misplaced += (not self.hostable[a][t]) - (not self.hostable[a][s])
        return total + max(0, moved - self.budget) + misplaced
