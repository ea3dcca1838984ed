r"""
How evenly the balancer and the greedy baselines spread each resource.

EXAMPLES:

On a snapshot with one hot tier, the balancer reduces the imbalance of all
resources while the cpu baseline only cares about cpu::

    >>> from sptlb.testing import hot_tier_snapshot
    >>> from sptlb.problem import RunConfig
    >>> from sptlb.evaluation.balance import eval_balance
    >>> report = eval_balance(hot_tier_snapshot(), RunConfig())
    >>> [result.solver for result in report.results]
    ['local', 'greedy_cpu', 'greedy_mem', 'greedy_tasks']
    >>> local = report.result("local")
    >>> all(local.imbalance[resource] < report.initial_imbalance[resource] for resource in ("cpu", "mem", "tasks"))
    True
    >>> report.result("greedy_cpu").imbalance["cpu"] < report.initial_imbalance["cpu"]
    True

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

from ..errors import Infeasible
from ..model import RESOURCES, imbalance, project_metrics
from ..problem import compile_problem
from ..solvers import solve
from ..solvers.greedy import solve_greedy
from ..util import Deadline

logger = logging.getLogger(__name__)

BASELINES = ("greedy_cpu", "greedy_mem", "greedy_tasks")


@dataclass(frozen=True)
class SolverBalance:
    r"""
    The final utilizations one solver arrived at.

    ``status`` is ``infeasible`` if the solver failed; ``final`` then holds
    the best effort mapping's metrics, or the initial ones if there was none.
    """
    solver: str
    status: str
    mapping: dict
    final: tuple
    imbalance: dict
    moves: int
    score: object
    elapsed: float
    evaluations: int
    message: str = ""


@dataclass(frozen=True)
class BalanceRow:
    tier_id: str
    resource: str
    solver: str
    initial_util: float
    final_util: float
    target: float


@dataclass(frozen=True)
class BalanceReport:
    r"""
    Initial and final utilization per tier and resource for each solver.
    """
    tier_ids: tuple
    targets: dict
    initial: tuple
    initial_imbalance: dict
    results: tuple

    def result(self, solver):
        for result in self.results:
            if result.solver == solver:
                return result
        raise KeyError(solver)

    def rows(self):
        r"""
        Return one row per tier, resource and solver, in this order.

        EXAMPLES::

            >>> from sptlb.testing import two_tier_snapshot
            >>> from sptlb.problem import RunConfig
            >>> from sptlb.evaluation.balance import eval_balance
            >>> rows = eval_balance(two_tier_snapshot(), RunConfig(move_budget_fraction=1)).rows()
            >>> len(rows)
            24
            >>> rows[0]
            BalanceRow(tier_id='t1', resource='cpu', solver='local', initial_util=0.8, final_util=0.4, target=0.7)

        """
        rows = []
        for i, tier_id in enumerate(self.tier_ids):
            for resource in RESOURCES:
                for result in self.results:
                    rows.append(BalanceRow(tier_id, resource, result.solver, self.initial[i].util(resource), result.final[i].util(resource), self.targets[tier_id][resource]))
        return rows


def _imbalance(metrics):
    return {resource: imbalance(metrics, resource) for resource in RESOURCES}


def _result(name, solution):
    status = "ok" if solution.feasible else "infeasible"
    message = "; ".join(str(violation) for violation in solution.violations)
    return SolverBalance(name, status, solution.mapping, solution.projected, _imbalance(solution.projected), len(solution.moves), solution.score, solution.elapsed, solution.evaluations, message)


def eval_balance(snapshot, config, raw_greedy=False):
    r"""
    Run the solver of ``config`` and the three greedy baselines on
    ``snapshot`` and report the utilizations they leave behind.

    With ``raw_greedy``, the baselines also run once more ignoring which SLOs
    the tiers support, reported as ``greedy_cpu_raw`` and so on.

    EXAMPLES:

    Nothing changes on a balanced snapshot::

        >>> from sptlb.testing import uniform_snapshot
        >>> from sptlb.problem import RunConfig
        >>> from sptlb.evaluation.balance import eval_balance
        >>> report = eval_balance(uniform_snapshot(tiers=3, apps=30), RunConfig())
        >>> all(result.final == report.initial and result.imbalance == report.initial_imbalance for result in report.results)
        True

    A baseline that only looks at tasks leaves memory above its target where
    the balancer does not::

        >>> from sptlb.testing import adversarial_snapshot
        >>> report = eval_balance(adversarial_snapshot(), RunConfig(move_budget_fraction=.2))
        >>> max(m.mem_util for m in report.result("greedy_tasks").final) > .7
        True
        >>> max(m.mem_util for m in report.result("local").final) <= .7
        True

    Each baseline leaves some resource much less balanced than the balancer::

        >>> local = report.result("local")
        >>> for baseline in ("greedy_cpu", "greedy_mem", "greedy_tasks"):
        ...     worst = max(report.result(baseline).imbalance[resource] / local.imbalance[resource] for resource in ("cpu", "mem"))
        ...     assert worst >= 1.5, baseline

    TESTS:

    Reported utilizations are those of the reported mappings::

        >>> from sptlb.model import project_metrics
        >>> snapshot = adversarial_snapshot()
        >>> all(list(result.final) == project_metrics(snapshot, result.mapping) for result in report.results)
        True

    The raw baselines come last::

        >>> from sptlb.testing import two_tier_snapshot
        >>> report = eval_balance(two_tier_snapshot(), RunConfig(move_budget_fraction=1), raw_greedy=True)
        >>> [result.solver for result in report.results]
        ['local', 'greedy_cpu', 'greedy_mem', 'greedy_tasks', 'greedy_cpu_raw', 'greedy_mem_raw', 'greedy_tasks_raw']

    """
    problem = compile_problem(snapshot, config)
    initial = tuple(project_metrics(snapshot, snapshot.identity()))
    targets = {tier.tier_id: {resource: tier.target(resource) for resource in RESOURCES} for tier in snapshot.tiers}

    results = []
    for name in dict.fromkeys((config.solver,) + BASELINES):
        run = replace(config, solver=name)
        try:
            solution = solve(problem, run, deadline=Deadline(run.timeout))
        except Infeasible as e:
            logger.warning("%s found no feasible mapping: %s", name, e)
            best = e.best_effort
            mapping = best.mapping if best is not None else snapshot.identity()
            final = tuple(project_metrics(snapshot, mapping))
            results.append(SolverBalance(name, "infeasible", mapping, final, _imbalance(final), len(best.moves) if best else 0, best.score if best else None, best.elapsed if best else 0., best.evaluations if best else 0, str(e)))
            continue
        results.append(_result(name, solution))

    if raw_greedy:
        for resource in RESOURCES:
            solution = solve_greedy(problem, resource, config, raw=True, deadline=Deadline(config.timeout))
            results.append(_result(solution.solver_name, solution))

    return BalanceReport(snapshot.tier_ids, targets, initial, _imbalance(initial), tuple(results))
