r"""
Solution files.

A solution file is JSON with a versioned header. It records which solver
produced the mapping under which settings, the avoid pairs that were in
effect, the moves, the score and the projected tier metrics. Wall-clock
times are only written on request so that repeated runs produce identical
files.

EXAMPLES::

    >>> import io
    >>> from sptlb.testing import slo_snapshot
    >>> from sptlb.problem import RunConfig, compile_problem
    >>> from sptlb.solvers import solve
    >>> from sptlb.files.solution import write_solution, read_solution, verify_solution
    >>> snapshot = slo_snapshot()
    >>> config = RunConfig(move_budget_fraction=.5)
    >>> problem = compile_problem(snapshot, config)
    >>> text = write_solution(solve(problem, config), problem, config)
    >>> print(text)
    {
      "format": "sptlb-solution v1",
      "solver": "local",
      ...
    }
    >>> verify_solution(snapshot, read_solution(io.StringIO(text))).ok
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

import json
import logging
import math
import os
from dataclasses import dataclass

from ..errors import SnapshotParseError, ValidationError
from ..model import check_mapping, project_metrics
from ..problem import RunConfig, add_avoid, compile_problem, is_feasible
from ..solvers import Move

logger = logging.getLogger(__name__)

FORMAT = "sptlb-solution v1"

# The settings a solution file records; they suffice to rebuild its problem.
CONFIG_FIELDS = ("move_budget_fraction", "timeout", "solver", "variant", "region_overlap_threshold", "seed", "criticality_threshold", "goal_priorities")

METRIC_FIELDS = ("tier_id", "cpu_used", "mem_used", "tasks_used", "app_count", "cpu_util", "mem_util", "task_util")


@dataclass(frozen=True)
class SolutionRecord:
    r"""
    The contents of a solution file.
    """
    solver: str
    terminated_by: str
    config: dict
    avoid: frozenset
    mapping: dict
    moves: tuple
    score: dict
    projected: tuple
    violations: tuple
    telemetry: dict


@dataclass(frozen=True)
class Verification:
    r"""
    The outcome of :func:`verify_solution`; ``ok`` if the mapping satisfies
    all constraints and the recorded moves and metrics are those of the
    mapping.
    """
    violations: tuple
    mismatches: tuple

    @property
    def ok(self):
        return not self.violations and not self.mismatches


def _document(solution, problem, config, timings):
    telemetry = {"iterations": solution.iterations, "evaluations": solution.evaluations}
    if timings:
        telemetry["elapsed"] = solution.elapsed
    return {
        "format": FORMAT,
        "solver": solution.solver_name,
        "terminated_by": solution.terminated_by,
        "config": {name: list(value) if isinstance(value, tuple) else value for name, value in ((name, getattr(config, name)) for name in CONFIG_FIELDS)},
        "move_budget": problem.move_budget,
        "avoid": sorted([app_id, tier_id] for app_id, tier_id in problem.avoid),
        "mapping": dict(solution.mapping),
        "moves": [{"app_id": move.app_id, "source": move.source, "dest": move.dest} for move in solution.moves],
        "score": {**solution.score.as_dict(), "feasible": solution.score.feasible},
        "projected": [{name: getattr(metrics, name) for name in METRIC_FIELDS} for metrics in solution.projected],
        "violations": [str(violation) for violation in solution.violations],
        "telemetry": telemetry,
    }


def write_solution(solution, problem, config, target=None, timings=False):
    r"""
    Write ``solution`` of ``problem`` solved with ``config`` to ``target``,
    a path or a text stream, or return it as a string if no ``target`` is
    given.

    EXAMPLES::

        >>> import json
        >>> from sptlb.testing import two_tier_snapshot
        >>> from sptlb.problem import RunConfig, compile_problem
        >>> from sptlb.solvers import solve
        >>> from sptlb.files.solution import write_solution
        >>> config = RunConfig(move_budget_fraction=1)
        >>> problem = compile_problem(two_tier_snapshot(), config)
        >>> solution = solve(problem, config)
        >>> document = json.loads(write_solution(solution, problem, config))
        >>> document["moves"], "elapsed" in document["telemetry"]
        ([{'app_id': 'a40', 'source': 't1', 'dest': 't2'}], False)
        >>> "elapsed" in json.loads(write_solution(solution, problem, config, timings=True))["telemetry"]
        True

    """
    text = json.dumps(_document(solution, problem, config, timings), indent=2) + "\n"
    if target is None:
        return text
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", encoding="utf-8") as stream:
            stream.write(text)
    else:
        target.write(text)


def read_solution(source):
    r"""
    Return the :class:`SolutionRecord` stored in ``source``, a path or a
    text stream.

    TESTS::

        >>> import io
        >>> from sptlb.files.solution import read_solution
        >>> read_solution(io.StringIO("{"))
        Traceback (most recent call last):
        ...
        sptlb.errors.SnapshotParseError: not a JSON document: ...
        >>> read_solution(io.StringIO('{"format": "sptlb-snapshot v1"}'))
        Traceback (most recent call last):
        ...
        sptlb.errors.SnapshotParseError: format: expected 'sptlb-solution v1' but found 'sptlb-snapshot v1'
        >>> read_solution(io.StringIO('{"format": "sptlb-solution v1", "solver": "local"}'))
        Traceback (most recent call last):
        ...
        sptlb.errors.ValidationError: terminated_by: missing

    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, encoding="utf-8") as stream:
            text = stream.read()

    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise SnapshotParseError("", f"not a JSON document: {e}")
    if not isinstance(document, dict):
        raise SnapshotParseError("", "not a solution document")
    if document.get("format") != FORMAT:
        raise SnapshotParseError("format", f"expected {FORMAT!r} but found {document.get('format')!r}")

    for key in ("solver", "terminated_by", "config", "avoid", "mapping", "moves", "score", "projected"):
        if key not in document:
            raise ValidationError(key, "missing")

    try:
        moves = tuple(Move(move["app_id"], move["source"], move["dest"]) for move in document["moves"])
    except (KeyError, TypeError) as e:
        raise ValidationError("moves", f"malformed move: {e}")

    return SolutionRecord(
        solver=document["solver"],
        terminated_by=document["terminated_by"],
        config=dict(document["config"]),
        avoid=frozenset((app_id, tier_id) for app_id, tier_id in document["avoid"]),
        mapping=dict(document["mapping"]),
        moves=moves,
        score=dict(document["score"]),
        projected=tuple(document["projected"]),
        violations=tuple(document.get("violations", ())),
        telemetry=dict(document.get("telemetry", {})))


def _config(record):
    settings = {name: record.config[name] for name in CONFIG_FIELDS if name in record.config}
    if "goal_priorities" in settings:
        settings["goal_priorities"] = tuple(settings["goal_priorities"])
    try:
        return RunConfig(**settings)
    except ValidationError as e:
        raise e.within("config")


def _close(recorded, actual):
    if isinstance(actual, str):
        return recorded == actual
    try:
        return math.isclose(recorded, actual, rel_tol=1e-9, abs_tol=1e-9)
    except TypeError:
        return False


def verify_solution(snapshot, record):
    r"""
    Check the solution ``record`` against ``snapshot`` from scratch: the
    mapping must satisfy all constraints of the problem it was solved for
    and the recorded moves and projected metrics must be those of the
    mapping.

    EXAMPLES:

    Moving the app of SLO 4 to the first tier is caught::

        >>> import io
        >>> from sptlb.testing import slo_snapshot
        >>> from sptlb.problem import RunConfig, compile_problem
        >>> from sptlb.solvers import make_solution
        >>> from sptlb.files.solution import write_solution, read_solution, verify_solution
        >>> snapshot = slo_snapshot()
        >>> config = RunConfig(move_budget_fraction=1)
        >>> problem = compile_problem(snapshot, config)
        >>> tampered = make_solution(problem, {**snapshot.identity(), "slo4": "t1"}, "manual")
        >>> verification = verify_solution(snapshot, read_solution(io.StringIO(write_solution(tampered, problem, config))))
        >>> verification.ok, [str(violation) for violation in verification.violations]
        (False, ["C4: app 'slo4' with SLO 4 is not supported by tier 't1'"])

    Editing the recorded metrics is caught, too::

        >>> from sptlb.solvers import solve
        >>> import json
        >>> document = json.loads(write_solution(solve(problem, config), problem, config))
        >>> document["projected"][0]["cpu_used"] += 1
        >>> verification = verify_solution(snapshot, read_solution(io.StringIO(json.dumps(document))))
        >>> verification.violations, verification.mismatches
        ((), ('projected[0].cpu_used: recorded 51.0 but the mapping gives 50.0',))

    TESTS:

    Avoid pairs recorded with the solution are enforced::

        >>> from sptlb.problem import add_avoid
        >>> avoiding = add_avoid(problem, "slo1", "t2")
        >>> moved = make_solution(avoiding, {**snapshot.identity(), "slo1": "t2"}, "manual")
        >>> [str(violation) for violation in verify_solution(snapshot, read_solution(io.StringIO(write_solution(moved, avoiding, config)))).violations]
        ["C4: app 'slo1' must avoid tier 't2'"]

    """
    config = _config(record)
    check_mapping(snapshot, record.mapping)

    problem = compile_problem(snapshot, config)
    for app_id, tier_id in sorted(record.avoid):
        problem = add_avoid(problem, app_id, tier_id)
    violations = is_feasible(problem, record.mapping).violations

    mismatches = []
    moved = {app.app_id: (app.current_tier, record.mapping[app.app_id]) for app in snapshot.apps if record.mapping[app.app_id] != app.current_tier}
    recorded = {move.app_id: (move.source, move.dest) for move in record.moves}
    if moved != recorded:
        mismatches.append(f"moves: recorded {sorted(recorded)} but the mapping moves {sorted(moved)}")

    projected = project_metrics(snapshot, record.mapping)
    if len(record.projected) != len(projected):
        mismatches.append(f"projected: recorded {len(record.projected)} tiers but the snapshot has {len(projected)}")
    else:
        for i, (entry, metrics) in enumerate(zip(record.projected, projected)):
            for name in METRIC_FIELDS:
                actual = getattr(metrics, name)
                if not _close(entry.get(name), actual):
                    mismatches.append(f"projected[{i}].{name}: recorded {entry.get(name)!r} but the mapping gives {actual!r}")

    if violations or mismatches:
        logger.warning("solution does not verify: %d violations, %d mismatches", len(violations), len(mismatches))
    return Verification(tuple(violations), tuple(mismatches))
