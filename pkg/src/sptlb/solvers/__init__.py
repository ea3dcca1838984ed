r"""
Solvers that turn a :class:`sptlb.problem.Problem` into a mapping of apps to
tiers.

- ``local``: greedy exploration of single-app relocations, see
  :mod:`sptlb.solvers.local`,
- ``optimal``: exact lexicographic branch and bound, see
  :mod:`sptlb.solvers.optimal`,
- ``greedy_cpu``, ``greedy_mem``, ``greedy_tasks``: the baseline that moves
  the largest app off the most loaded tier, see :mod:`sptlb.solvers.greedy`.

EXAMPLES::

    >>> from sptlb.testing import two_tier_snapshot
    >>> from sptlb.problem import RunConfig, compile_problem
    >>> from sptlb.solvers import solve
    >>> config = RunConfig(move_budget_fraction=1, solver="optimal")
    >>> solution = solve(compile_problem(two_tier_snapshot(), config), config)
    >>> solution.moves
    (Move(app_id='a40', source='t1', dest='t2'),)
    >>> solution.solver_name, solution.terminated_by, solution.feasible
    ('optimal', 'converged', True)

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

from ..model import project_metrics
from ..problem import is_feasible, score
from ..util import Deadline

logger = logging.getLogger(__name__)

TERMINATIONS = ("converged", "timeout", "budget_exhausted")


@dataclass(frozen=True)
class Move:
    app_id: str
    source: str
    dest: str


@dataclass(frozen=True)
class Solution:
    r"""
    A mapping of apps to tiers together with its score, the projected tier
    metrics and how the solver got there.

    A solution with ``violations`` is a flagged best-effort result that does
    not satisfy all constraints.
    """
    mapping: dict
    moves: tuple
    score: object
    projected: tuple
    solver_name: str
    elapsed: float
    iterations: int
    terminated_by: str
    evaluations: int = 0
    violations: tuple = field(default=(), compare=False)

    @property
    def feasible(self):
        return not self.violations

    def moved_ids(self):
        return sorted(move.app_id for move in self.moves)


def make_solution(problem, mapping, solver_name, elapsed=0., iterations=0, terminated_by="converged", evaluations=0):
    r"""
    Return the :class:`Solution` for ``mapping``, scoring it and checking it
    against ``problem`` from scratch.

    EXAMPLES::

        >>> from sptlb.testing import two_tier_snapshot
        >>> from sptlb.problem import RunConfig, compile_problem
        >>> from sptlb.solvers import make_solution
        >>> snapshot = two_tier_snapshot(cpu_capacity=60)
        >>> problem = compile_problem(snapshot, RunConfig())
        >>> solution = make_solution(problem, snapshot.identity(), "identity")
        >>> solution.feasible, [str(violation) for violation in solution.violations]
        (False, ["C1: tier 't1' uses 80.0 cpu of 60.0"])

    """
    snapshot = problem.snapshot
    mapping = {app.app_id: mapping[app.app_id] for app in snapshot.apps}
    moves = tuple(sorted((Move(app.app_id, app.current_tier, mapping[app.app_id]) for app in snapshot.apps if mapping[app.app_id] != app.current_tier), key=lambda move: move.app_id))
    return Solution(
        mapping=mapping,
        moves=moves,
        score=score(problem, mapping),
        projected=tuple(project_metrics(snapshot, mapping)),
        solver_name=solver_name,
        elapsed=elapsed,
        iterations=iterations,
        terminated_by=terminated_by,
        evaluations=evaluations,
        violations=is_feasible(problem, mapping).violations)


def solve(problem, config, deadline=None):
    r"""
    Run the solver selected by ``config.solver`` on ``problem``.

    The local and the optimal solver raise :class:`sptlb.errors.Infeasible`
    if they cannot satisfy all constraints. The greedy baselines never
    raise; their solutions list the constraints they break in
    ``violations``.
    """
    from .local import solve_local
    from .optimal import solve_optimal
    from .greedy import solve_greedy

    deadline = deadline or Deadline(config.timeout)
    if config.solver == "local":
        return solve_local(problem, config, deadline=deadline)
    if config.solver == "optimal":
        return solve_optimal(problem, config, deadline=deadline)
    if config.solver.startswith("greedy_"):
        return solve_greedy(problem, config.solver[len("greedy_"):], config, deadline=deadline)
    raise ValueError(f"unknown solver {config.solver!r}")
