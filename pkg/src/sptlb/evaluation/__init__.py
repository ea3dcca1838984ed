r"""
Evaluation of balancing decisions.

- :mod:`sptlb.evaluation.balance` compares how well the balancer and the
  greedy baselines balance each resource,
- :mod:`sptlb.evaluation.latency` samples the network latency that moves
  cause under the different ways of integrating with the region scheduler,
- :func:`compare_solutions` explains how two decisions differ.

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

from dataclasses import dataclass

from ..errors import SnapshotMismatch
from ..model import RESOURCES, project_metrics
from ..problem import score
from ..problem.order import GOALS, compare


@dataclass(frozen=True)
class SolutionDiff:
    r"""
    How two solutions ``a`` and ``b`` differ.

    Deltas are ``a`` minus ``b``, so negative goal deltas favor ``a``.
    ``verdict`` is ``a``, ``b`` or ``tie``.
    """
    goal_deltas: dict
    util_deltas: dict
    only_a: tuple
    only_b: tuple
    verdict: str
    deciding_goal: str = None


def _check_same_snapshot(solution, snapshot, name):
    if set(solution.mapping) != set(snapshot.app_ids):
        raise SnapshotMismatch(f"solution {name} maps apps {sorted(set(solution.mapping) ^ set(snapshot.app_ids))} that do not match the snapshot")
    for move in solution.moves:
        if snapshot.app(move.app_id).current_tier != move.source:
            raise SnapshotMismatch(f"solution {name} moves {move.app_id!r} from {move.source!r} but it runs on {snapshot.app(move.app_id).current_tier!r}")
    if tuple(metrics.tier_id for metrics in solution.projected) != snapshot.tier_ids:
        raise SnapshotMismatch(f"solution {name} has metrics for other tiers than the snapshot")


def compare_solutions(a, b, problem):
    r"""
    Return a :class:`SolutionDiff` between the solutions ``a`` and ``b`` of
    ``problem``.

    EXAMPLES:

    A solution does not differ from itself::

        >>> from sptlb.testing import two_tier_snapshot
        >>> from sptlb.problem import RunConfig, compile_problem
        >>> from sptlb.solvers import make_solution
        >>> from sptlb.solvers.local import solve_local
        >>> from sptlb.evaluation import compare_solutions
        >>> snapshot = two_tier_snapshot()
        >>> config = RunConfig(move_budget_fraction=1)
        >>> problem = compile_problem(snapshot, config)
        >>> balanced = solve_local(problem, config)
        >>> diff = compare_solutions(balanced, balanced, problem)
        >>> diff.verdict, set(diff.goal_deltas.values()), diff.only_a, diff.only_b
        ('tie', {0.0}, (), ())

    An improvement beats doing nothing::

        >>> identity = make_solution(problem, snapshot.identity(), "identity")
        >>> diff = compare_solutions(identity, balanced, problem)
        >>> diff.verdict, diff.deciding_goal, diff.only_b
        ('b', 'g5_over_target', (Move(app_id='a40', source='t1', dest='t2'),))
        >>> round(diff.util_deltas["t1"]["cpu"], 9)
        0.4

    The balancer beats the cpu baseline on the balance of memory::

        >>> from sptlb.testing import adversarial_snapshot
        >>> from sptlb.solvers.greedy import solve_greedy
        >>> from sptlb.solvers.optimal import solve_optimal
        >>> snapshot = adversarial_snapshot()
        >>> config = RunConfig(move_budget_fraction=.2)
        >>> problem = compile_problem(snapshot, config)
        >>> diff = compare_solutions(solve_optimal(problem, config), solve_greedy(problem, "cpu", config), problem)
        >>> diff.verdict, diff.goal_deltas["g6_resource_imbalance"] < 0
        ('a', True)

    TESTS::

        >>> compare_solutions(identity, identity, problem)
        Traceback (most recent call last):
        ...
        sptlb.errors.SnapshotMismatch: solution a maps apps ['a10', 'a30', 'a40', 'c1', 'c2', 'c3', 'c4', 'c5', 'm1', 'm2', 'm3', 'm4', 'm5'] that do not match the snapshot

    """
    snapshot = problem.snapshot
    _check_same_snapshot(a, snapshot, "a")
    _check_same_snapshot(b, snapshot, "b")

    score_a, score_b = score(problem, a.mapping), score(problem, b.mapping)
    goal_deltas = {goal: getattr(score_a, goal) - getattr(score_b, goal) for goal in GOALS}

    metrics_a, metrics_b = project_metrics(snapshot, a.mapping), project_metrics(snapshot, b.mapping)
    util_deltas = {x.tier_id: {resource: x.util(resource) - y.util(resource) for resource in RESOURCES} for x, y in zip(metrics_a, metrics_b)}

    moves_a, moves_b = set(a.moves), set(b.moves)
    only_a = tuple(sorted(moves_a - moves_b, key=lambda move: move.app_id))
    only_b = tuple(sorted(moves_b - moves_a, key=lambda move: move.app_id))

    priorities = problem.goal_priorities
    verdict = compare(score_a, score_b, priorities)
    deciding_goal = None
    if verdict:
        deciding_goal = next(goal for goal in priorities if compare(score_a, score_b, [goal]))
    return SolutionDiff(goal_deltas, util_deltas, only_a, only_b, {-1: "a", 0: "tie", 1: "b"}[verdict], deciding_goal)
