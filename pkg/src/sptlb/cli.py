r"""
The ``sptlb`` command line.

Exit codes: 0 on success, 1 on invalid input or usage, 2 if no valid or
acknowledged solution could be produced or a solution does not verify, 3 on
internal errors.

EXAMPLES:

Generate a snapshot, balance it with the default settings and verify the
result::

    >>> import json, os, tempfile
    >>> from sptlb.cli import run_cli
    >>> directory = tempfile.mkdtemp()
    >>> snapshot = os.path.join(directory, "snapshot.yaml")
    >>> run_cli(["generate", "--tiers", "5", "--apps", "100", "--hot-tier", "2", "--seed", "1", "-o", snapshot])
    0
    >>> solution = os.path.join(directory, "solution.json")
    >>> run_cli(["balance", snapshot, "--solver", "local", "--timeout", "30", "--move-budget", "0.10", "-o", solution])
    0
    >>> with open(solution) as stream:
    ...     len(json.load(stream)["moves"]) <= 10
    True
    >>> run_cli(["verify", snapshot, solution])
    ok
    0

A solution that moves an app of SLO 4 to the first tier does not verify::

    >>> from sptlb.testing import slo_snapshot
    >>> from sptlb.files.snapshot import dump_snapshot
    >>> snapshot = os.path.join(directory, "slo.yaml")
    >>> dump_snapshot(slo_snapshot(), snapshot)
    >>> run_cli(["balance", snapshot, "--move-budget", "1", "-o", solution])
    0
    >>> with open(solution) as stream:
    ...     document = json.load(stream)
    >>> document["mapping"]["slo4"] = "t1"
    >>> with open(solution, "w") as stream:
    ...     json.dump(document, stream)
    >>> run_cli(["verify", snapshot, solution])
    C4: app 'slo4' with SLO 4 is not supported by tier 't1'
    ...
    2

Latency reports are reproducible::

    >>> from sptlb.testing import latency_snapshot
    >>> snapshot = os.path.join(directory, "latency.yaml")
    >>> dump_snapshot(latency_snapshot(), snapshot)
    >>> for run in ("first", "second"):
    ...     run_cli(["eval-latency", snapshot, "--variants", "no_cnst,w_cnst,manual_cnst", "--solvers", "local", "--move-budget", "1", "--seed", "7", "--out", os.path.join(directory, run)])
    0
    0
    >>> def read(name):
    ...     with open(os.path.join(directory, name), "rb") as stream:
    ...         return stream.read()
    >>> read("first.csv") == read("second.csv") and read("first.json") == read("second.json")
    True

TESTS:

Usage errors exit with 1::

    >>> run_cli(["balance", snapshot, "--bogus"])
    1
    >>> run_cli(["balance", snapshot, "--move-budget", "2"])
    1
    >>> run_cli(["balance", os.path.join(directory, "missing.yaml")])
    1

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

import argparse
import logging
import sys

from .errors import Infeasible, SolverContractError, SptlbError
from .evaluation.balance import eval_balance
from .evaluation.latency import eval_latency, latency_configs
from .files.reports import balance_csv, balance_json, latency_csv, latency_json, trace_json, write_text
from .files.snapshot import dump_snapshot, load_snapshot
from .files.solution import read_solution, verify_solution, write_solution
from .generator import GeneratorSpec, generate
from .hierarchy import HostPool, RegionPolicy, cooperate
from .problem import CDF_MODES, SLOT_COSTS, SOLVERS, VARIANTS, RunConfig, compile_problem
from .solvers import solve

logger = logging.getLogger(__name__)


class ArgumentParser(argparse.ArgumentParser):
    r"""
    An argument parser that exits with 1 on usage errors.
    """

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _list(choices):
    def parse(value):
        items = [item.strip() for item in value.split(",") if item.strip()]
        for item in items:
            if choices is not None and item not in choices:
                raise argparse.ArgumentTypeError(f"{item!r} is not one of {', '.join(choices)}")
        return items
    return parse


def _floats(value):
    try:
        return [float(item) for item in _list(None)(value)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {value!r}")


def _add_run_options(parser):
    parser.add_argument("snapshot", help="snapshot file")
    parser.add_argument("--solver", choices=SOLVERS, default="local")
    parser.add_argument("--timeout", type=float, default=30., help="seconds per solve (default: 30)")
    parser.add_argument("--move-budget", type=float, default=.1, help="fraction of apps that may move (default: 0.10)")
    parser.add_argument("--variant", choices=VARIANTS, default="no_cnst")
    parser.add_argument("--overlap-threshold", type=float, default=.5, help="region overlap required by w_cnst")
    parser.add_argument("--criticality-threshold", type=float, default=None, help="criticality above which moves count as critical (default: the median)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--strict", action="store_true", help="reject apps that run on a tier that does not support their SLO")
    parser.add_argument("--timings", action="store_true", help="include wall-clock times in the output")


def build_parser():
    parser = ArgumentParser(prog="sptlb", description="Balance stream processing apps across tiers.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for progress, -vv for details")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    command = commands.add_parser("generate", help="write a synthetic snapshot")
    command.add_argument("--tiers", type=int, default=5)
    command.add_argument("--apps", type=int, default=100)
    command.add_argument("--regions", type=int, default=4)
    command.add_argument("--zones", type=int, default=2, help="groups of regions; tiers only have hosts in the regions of one zone")
    command.add_argument("--hot-tier", type=int, default=None, help="0-based index of a tier that gets more apps")
    command.add_argument("--skew", type=float, default=2.)
    command.add_argument("--seed", type=int, default=0)
    command.add_argument("-o", "--output", default=None)

    command = commands.add_parser("balance", help="balance a snapshot and write the solution")
    _add_run_options(command)
    command.add_argument("-o", "--output", default=None)

    command = commands.add_parser("cooperate", help="balance with feedback from the region and host schedulers")
    _add_run_options(command)
    command.add_argument("--max-iterations", type=int, default=20)
    command.add_argument("--radius-ms", type=float, default=30., help="latency within which a region counts as near the data source")
    command.add_argument("--slot-cost", choices=SLOT_COSTS, default="apps")
    command.add_argument("-o", "--output", default=None)

    command = commands.add_parser("eval-balance", help="compare the balancer with the greedy baselines")
    _add_run_options(command)
    command.add_argument("--raw-greedy", action="store_true", help="also run the baselines ignoring SLO support")
    command.add_argument("--out", default=None, help="write PREFIX.csv and PREFIX.json")

    command = commands.add_parser("eval-latency", help="sample the latency of moves under each variant")
    _add_run_options(command)
    command.add_argument("--variants", type=_list(VARIANTS), default=list(VARIANTS))
    command.add_argument("--solvers", type=_list(("local", "optimal")), default=["local", "optimal"])
    command.add_argument("--timeouts", type=_floats, default=None, help="comma separated timeouts (default: --timeout)")
    command.add_argument("--manual-threshold-ms", type=int, default=None, help="p99 above which manual_cnst forbids a transition (default: --radius-ms)")
    command.add_argument("--radius-ms", type=float, default=30.)
    command.add_argument("--cdf-mode", choices=CDF_MODES, default="pooled")
    command.add_argument("--place-with-hosts", action="store_true", help="land moved apps where the host scheduler puts them")
    command.add_argument("--out", default=None, help="write PREFIX.csv and PREFIX.json")

    command = commands.add_parser("verify", help="check a solution file against its snapshot")
    command.add_argument("snapshot")
    command.add_argument("solution")

    return parser


def _config(args, **overrides):
    return RunConfig(
        move_budget_fraction=args.move_budget,
        timeout=args.timeout,
        solver=args.solver,
        variant=args.variant,
        region_overlap_threshold=args.overlap_threshold,
        seed=args.seed,
        criticality_threshold=args.criticality_threshold,
        strict=args.strict,
        **overrides)


def _emit(text, target):
    if target is None:
        sys.stdout.write(text)
    else:
        write_text(text, target)


def _generate(args):
    spec = GeneratorSpec(tier_count=args.tiers, app_count=args.apps, region_count=args.regions, zone_count=args.zones, hot_tier_index=args.hot_tier, skew=args.skew, seed=args.seed)
    snapshot = generate(spec)
    if args.output is None:
        sys.stdout.write(dump_snapshot(snapshot))
    else:
        dump_snapshot(snapshot, args.output)
    return 0


def _balance(args):
    config = _config(args)
    snapshot = load_snapshot(args.snapshot, strict=config.strict)
    problem = compile_problem(snapshot, config)
    try:
        solution = solve(problem, config)
    except Infeasible as e:
        logger.error("%s", e)
        if e.best_effort is None:
            return 2
        solution = e.best_effort
    _emit(write_solution(solution, problem, config, timings=args.timings), args.output)
    logger.info("%s moved %d apps, terminated by %s", solution.solver_name, len(solution.moves), solution.terminated_by)
    return 0 if solution.feasible else 2


def _cooperate(args):
    config = _config(args, max_hierarchy_iterations=args.max_iterations, latency_radius_ms=args.radius_ms, slot_cost=args.slot_cost)
    snapshot = load_snapshot(args.snapshot, strict=config.strict)
    trace = cooperate(compile_problem(snapshot, config), config, RegionPolicy.from_snapshot(snapshot, radius_ms=config.latency_radius_ms), HostPool.from_snapshot(snapshot))
    _emit(trace_json(trace, timings=args.timings), args.output)
    return 2 if trace.unresolved else 0


def _eval_balance(args):
    config = _config(args)
    report = eval_balance(load_snapshot(args.snapshot, strict=config.strict), config, raw_greedy=args.raw_greedy)
    if args.out is None:
        sys.stdout.write(balance_csv(report))
    else:
        write_text(balance_csv(report), f"{args.out}.csv")
        write_text(balance_json(report, timings=args.timings), f"{args.out}.json")
    return 0


def _eval_latency(args):
    base = _config(args, manual_latency_threshold_ms=args.manual_threshold_ms, latency_radius_ms=args.radius_ms, cdf_mode=args.cdf_mode)
    configs = latency_configs(base, variants=args.variants, solvers=args.solvers, timeouts=args.timeouts)
    report = eval_latency(load_snapshot(args.snapshot, strict=base.strict), configs, place_with_hosts=args.place_with_hosts)
    if args.out is None:
        sys.stdout.write(latency_csv(report, timings=args.timings))
    else:
        write_text(latency_csv(report, timings=args.timings), f"{args.out}.csv")
        write_text(latency_json(report, timings=args.timings), f"{args.out}.json")
    return 0


def _verify(args):
    snapshot = load_snapshot(args.snapshot)
    verification = verify_solution(snapshot, read_solution(args.solution))
    for violation in verification.violations:
        print(violation)
    for mismatch in verification.mismatches:
        print(mismatch)
    if verification.ok:
        print("ok")
        return 0
    return 2


COMMANDS = {
    "generate": _generate,
    "balance": _balance,
    "cooperate": _cooperate,
    "eval-balance": _eval_balance,
    "eval-latency": _eval_latency,
    "verify": _verify,
}


def run_cli(argv):
    r"""
    Run the command line with the arguments ``argv`` and return the exit
    code.
    """
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return 0 if e.code is None else e.code

    logging.basicConfig(
        level={0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True)

    try:
        return COMMANDS[args.command](args)
    except Infeasible as e:
        logger.error("%s", e)
        return 2
    except SolverContractError:
        logger.exception("internal error")
        return 3
    except SptlbError as e:
        logger.error("%s", e)
        return 1
    except OSError as e:
        logger.error("%s", e)
        return 1
    except Exception:
        logger.exception("internal error")
        return 3


def main():
    sys.exit(run_cli(sys.argv[1:]))
