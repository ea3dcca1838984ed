r"""
Report files of the evaluations and of co-operation sessions.

Every report is written as plot-ready CSV with a fixed header and as JSON.
Latencies are whole milliseconds. Wall-clock times only appear with
``timings`` so that reruns with the same seed produce identical files.

EXAMPLES::

    >>> from sptlb.testing import two_tier_snapshot
    >>> from sptlb.problem import RunConfig
    >>> from sptlb.evaluation.balance import eval_balance
    >>> from sptlb.files.reports import balance_csv
    >>> print(balance_csv(eval_balance(two_tier_snapshot(), RunConfig(move_budget_fraction=1))))
    tier_id,resource,solver,initial_util,final_util,target
    t1,cpu,local,0.800000,0.400000,0.700000
    ...

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

import csv
import io
import json
import os

from ..model import RESOURCES

BALANCE_COLUMNS = ("tier_id", "resource", "solver", "initial_util", "final_util", "target")
LATENCY_COLUMNS = ("variant", "solver", "timeout", "worst_case_p99_ms", "p50_ms", "p0_ms", "sample_count", "moves", "status")


def _fraction(value):
    return format(value, ".6f")


def _csv(header, rows):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _json(document):
    return json.dumps(document, indent=2) + "\n"


def write_text(text, target):
    r"""
    Write ``text`` to ``target``, a path or a text stream.
    """
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", encoding="utf-8", newline="") as stream:
            stream.write(text)
    else:
        target.write(text)


def balance_csv(report):
    return _csv(BALANCE_COLUMNS, [(row.tier_id, row.resource, row.solver, _fraction(row.initial_util), _fraction(row.final_util), _fraction(row.target)) for row in report.rows()])


def balance_json(report, timings=False):
    r"""
    Return the JSON form of the :class:`sptlb.evaluation.balance.BalanceReport` ``report``.

    EXAMPLES::

        >>> import json
        >>> from sptlb.testing import hot_tier_snapshot
        >>> from sptlb.problem import RunConfig
        >>> from sptlb.evaluation.balance import eval_balance
        >>> from sptlb.files.reports import balance_json
        >>> document = json.loads(balance_json(eval_balance(hot_tier_snapshot(), RunConfig())))
        >>> [solver["solver"] for solver in document["solvers"]]
        ['local', 'greedy_cpu', 'greedy_mem', 'greedy_tasks']
        >>> sorted(document["solvers"][0])
        ['evaluations', 'final_imbalance', 'message', 'moves', 'score', 'solver', 'status']

    """
    solvers = []
    for result in report.results:
        entry = {
            "solver": result.solver,
            "status": result.status,
            "moves": result.moves,
            "final_imbalance": {resource: result.imbalance[resource] for resource in RESOURCES},
            "score": result.score.as_dict() if result.score is not None else None,
            "evaluations": result.evaluations,
            "message": result.message,
        }
        if timings:
            entry["elapsed"] = result.elapsed
        solvers.append(entry)

    return _json({
        "format": "sptlb-balance v1",
        "targets": report.targets,
        "initial_imbalance": {resource: report.initial_imbalance[resource] for resource in RESOURCES},
        "solvers": solvers,
        "rows": [dict(zip(BALANCE_COLUMNS, (row.tier_id, row.resource, row.solver, row.initial_util, row.final_util, row.target))) for row in report.rows()],
    })


def _optional(value):
    return "" if value is None else value


def latency_csv(report, timings=False):
    r"""
    Return one CSV row per cell of the
    :class:`sptlb.evaluation.latency.LatencyReport` ``report``.

    EXAMPLES::

        >>> from sptlb.testing import latency_snapshot
        >>> from sptlb.problem import RunConfig
        >>> from sptlb.evaluation.latency import eval_latency, latency_configs
        >>> from sptlb.files.reports import latency_csv
        >>> report = eval_latency(latency_snapshot(), latency_configs(RunConfig(move_budget_fraction=1, seed=7), solvers=["optimal"]))
        >>> print(latency_csv(report))
        variant,solver,timeout,worst_case_p99_ms,p50_ms,p0_ms,sample_count,moves,status
        no_cnst,optimal,30.0,80,41,1,1000,2,ok
        w_cnst,optimal,30.0,1,1,1,1000,1,ok
        manual_cnst,optimal,30.0,1,1,1,1000,1,ok
        >>> latency_csv(report, timings=True).splitlines()[0]
        'variant,solver,timeout,worst_case_p99_ms,p50_ms,p0_ms,sample_count,moves,status,solve_elapsed'

    """
    header = LATENCY_COLUMNS + (("solve_elapsed",) if timings else ())
    rows = []
    for cell in report.cells:
        row = [cell.variant, cell.solver, cell.timeout, _optional(cell.worst_case_p99_ms), _optional(cell.p50_ms), _optional(cell.p0_ms), cell.sample_count, cell.moves, cell.status]
        if timings:
            row.append(cell.solve_elapsed)
        rows.append(row)
    return _csv(header, rows)


def latency_json(report, timings=False):
    cells = []
    for cell in report.cells:
        entry = {
            "variant": cell.variant,
            "solver": cell.solver,
            "timeout": cell.timeout,
            "worst_case_p99_ms": cell.worst_case_p99_ms,
            "p50_ms": cell.p50_ms,
            "p0_ms": cell.p0_ms,
            "sample_count": cell.sample_count,
            "moves": cell.moves,
            "status": cell.status,
            "avoid_added": cell.avoid_added,
            "evaluations": cell.evaluations,
            "pair_p99_ms": [{"source": source, "dest": dest, "p99_ms": p99} for (source, dest), p99 in cell.pair_p99_ms.items()],
        }
        if timings:
            entry["solve_elapsed"] = cell.solve_elapsed
        cells.append(entry)
    return _json({"format": "sptlb-latency v1", "cdf_mode": report.cdf_mode, "place_with_hosts": report.place_with_hosts, "cells": cells})


def trace_json(trace, timings=False):
    r"""
    Return the JSON form of the :class:`sptlb.hierarchy.CoopTrace` ``trace``.

    EXAMPLES::

        >>> import json
        >>> from sptlb.testing import rejection_snapshot
        >>> from sptlb.problem import RunConfig, compile_problem
        >>> from sptlb.hierarchy import RegionPolicy, HostPool, cooperate
        >>> from sptlb.files.reports import trace_json
        >>> snapshot = rejection_snapshot()
        >>> config = RunConfig(move_budget_fraction=1)
        >>> trace = cooperate(compile_problem(snapshot, config), config, RegionPolicy.from_snapshot(snapshot), HostPool.from_snapshot(snapshot))
        >>> document = json.loads(trace_json(trace))
        >>> document["outcome"], document["avoid"], document["iterations"][0]["region_rejections"]
        ('acknowledged', [['a40', 't2']], [['a40', 't2']])

    """
    final = trace.final
    document = {
        "format": "sptlb-trace v1",
        "outcome": trace.outcome,
        "unresolved": trace.unresolved,
        "avoid": sorted([app_id, tier_id] for app_id, tier_id in trace.avoid),
        "iterations": [{
            "proposed": [list(move) for move in iteration.proposed],
            "region_rejections": [list(move) for move in iteration.region_rejections],
            "host_rejections": [list(move) for move in iteration.host_rejections],
            "avoid_added": [list(pair) for pair in iteration.avoid_added],
        } for iteration in trace.iterations],
        "final": {
            "solver": final.solver_name,
            "mapping": dict(final.mapping),
            "moves": [{"app_id": move.app_id, "source": move.source, "dest": move.dest} for move in final.moves],
            "score": final.score.as_dict(),
        },
        "placements": dict(sorted(trace.placements.items())),
        "free_slots": [{"tier_id": tier_id, "region": region, "free": free} for (tier_id, region), free in sorted(trace.pool.slots.items())] if trace.pool is not None else [],
    }
    if timings:
        document["final"]["elapsed"] = final.elapsed
    return _json(document)
