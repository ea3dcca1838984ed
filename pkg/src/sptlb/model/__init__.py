r"""
Apps, tiers and cluster snapshots, and the metrics a mapping of apps to tiers
projects onto the tiers.

EXAMPLES:

A snapshot consists of tiers and of the apps currently running on them::

    >>> from sptlb.model import AppRecord, TierSpec, Snapshot, project_metrics
    >>> snapshot = Snapshot(
    ...     tiers=[TierSpec("t1", cpu_capacity=100, mem_capacity=100, task_limit=10, supported_slos={1}, regions={"r1": 4})],
    ...     apps=[AppRecord("a", cpu_p99=30, mem_p99=10, task_count=2, slo_score=1, criticality_score=0, source_region="r1", current_tier="t1"),
    ...           AppRecord("b", cpu_p99=40, mem_p99=20, task_count=3, slo_score=1, criticality_score=0, source_region="r1", current_tier="t1")])

The projected metrics of the current placement::

    >>> metrics, = project_metrics(snapshot, snapshot.identity())
    >>> metrics.cpu_used, metrics.cpu_util
    (70.0, 0.7)
    >>> metrics.tasks_used, metrics.task_util
    (5, 0.5)

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

from ..errors import ValidationError, UnknownIdError

logger = logging.getLogger(__name__)

RESOURCES = ("cpu", "mem", "tasks")


def _check(condition, path, message):
    if not condition:
        raise ValidationError(path, message)


def _is_integral(value):
    try:
        return not isinstance(value, bool) and int(value) == value
    except (TypeError, ValueError, OverflowError):
        return False


@dataclass(frozen=True)
class AppRecord:
    r"""
    A streaming application with its peak (p99) resource demand.

    EXAMPLES::

        >>> from sptlb.model import AppRecord
        >>> AppRecord("a", cpu_p99=1.5, mem_p99=2, task_count=4, slo_score=3, criticality_score=.5, source_region="r1", current_tier="t1")
        AppRecord(app_id='a', cpu_p99=1.5, mem_p99=2.0, task_count=4, slo_score=3, criticality_score=0.5, source_region='r1', current_tier='t1')

    TESTS::

        >>> AppRecord("a", cpu_p99=-1, mem_p99=2, task_count=4, slo_score=3, criticality_score=0, source_region="r1", current_tier="t1")
        Traceback (most recent call last):
        ...
        sptlb.errors.ValidationError: cpu_p99: must be non-negative but is -1

        >>> AppRecord("a", cpu_p99=1, mem_p99=2, task_count=0, slo_score=3, criticality_score=0, source_region="r1", current_tier="t1")
        Traceback (most recent call last):
        ...
        sptlb.errors.ValidationError: task_count: must be an integer >= 1 but is 0

    """
    app_id: str
    cpu_p99: float
    mem_p99: float
    task_count: int
    slo_score: int
    criticality_score: float
    source_region: str
    current_tier: str

    def __post_init__(self):
        _check(isinstance(self.app_id, str) and self.app_id, "app_id", "must be a non-empty string")
        for name in ("cpu_p99", "mem_p99", "criticality_score"):
            value = getattr(self, name)
            _check(isinstance(value, (int, float)) and not isinstance(value, bool) and value >= 0, name, f"must be non-negative but is {value!r}")
            object.__setattr__(self, name, float(value))
        _check(_is_integral(self.task_count) and self.task_count >= 1, "task_count", f"must be an integer >= 1 but is {self.task_count!r}")
        object.__setattr__(self, "task_count", int(self.task_count))
        _check(_is_integral(self.slo_score), "slo_score", f"must be an integer but is {self.slo_score!r}")
        object.__setattr__(self, "slo_score", int(self.slo_score))
        _check(isinstance(self.source_region, str) and self.source_region, "source_region", "must be a non-empty string")
        _check(isinstance(self.current_tier, str) and self.current_tier, "current_tier", "must be a non-empty string")

    def demand(self, resource):
        r"""
        Return the demand of this app for ``resource``, one of ``cpu``, ``mem``, ``tasks``.
        """
        if resource == "cpu":
            return self.cpu_p99
        if resource == "mem":
            return self.mem_p99
        if resource == "tasks":
            return self.task_count
        raise ValueError(f"unknown resource {resource!r}")


@dataclass(frozen=True)
class TierSpec:
    r"""
    A tier with its hard capacities, its utilization targets, the SLO classes
    it supports and the regions it has hosts in.

    The capacities are hard bounds; the targets are the soft "ideal"
    utilization, 70% for cpu and memory and 80% for task count by default.

    EXAMPLES::

        >>> from sptlb.model import TierSpec
        >>> tier = TierSpec("t1", cpu_capacity=200, mem_capacity=100, task_limit=50, supported_slos=[1, 2], regions={"r2": 3, "r1": 0})
        >>> tier.capacity("cpu"), tier.target("tasks")
        (200.0, 0.8)
        >>> sorted(tier.supported_slos)
        [1, 2]

    TESTS::

        >>> TierSpec("t1", cpu_capacity=0, mem_capacity=100, task_limit=50, supported_slos=[1], regions={"r1": 1})
        Traceback (most recent call last):
        ...
        sptlb.errors.ValidationError: cpu_capacity: must be positive but is 0

        >>> TierSpec("t1", cpu_capacity=1, mem_capacity=1, task_limit=1, supported_slos=[1], regions={"r1": 1}, util_target_mem=1.5)
        Traceback (most recent call last):
        ...
        sptlb.errors.ValidationError: util_target_mem: must be in (0, 1] but is 1.5

        >>> TierSpec("t1", cpu_capacity=1, mem_capacity=1, task_limit=1, supported_slos=[], regions={"r1": 1})
        Traceback (most recent call last):
        ...
        sptlb.errors.ValidationError: supported_slos: must not be empty

        >>> TierSpec("t1", cpu_capacity=1, mem_capacity=1, task_limit=1, supported_slos=[1], regions={"r1": -1})
        Traceback (most recent call last):
        ...
        sptlb.errors.ValidationError: regions.r1: host slots must be an integer >= 0 but is -1

    """
    tier_id: str
    cpu_capacity: float
    mem_capacity: float
    task_limit: int
    supported_slos: frozenset
    regions: dict
    util_target_cpu: float = .7
    util_target_mem: float = .7
    util_target_tasks: float = .8

    def __post_init__(self):
        _check(isinstance(self.tier_id, str) and self.tier_id, "tier_id", "must be a non-empty string")
        for name in ("cpu_capacity", "mem_capacity"):
            value = getattr(self, name)
            _check(isinstance(value, (int, float)) and not isinstance(value, bool) and value > 0, name, f"must be positive but is {value!r}")
            object.__setattr__(self, name, float(value))
        _check(_is_integral(self.task_limit) and self.task_limit > 0, "task_limit", f"must be a positive integer but is {self.task_limit!r}")
        object.__setattr__(self, "task_limit", int(self.task_limit))
        for name in ("util_target_cpu", "util_target_mem", "util_target_tasks"):
            value = getattr(self, name)
            _check(isinstance(value, (int, float)) and not isinstance(value, bool) and 0 < value <= 1, name, f"must be in (0, 1] but is {value!r}")
            object.__setattr__(self, name, float(value))

        slos = frozenset(self.supported_slos)
        _check(slos, "supported_slos", "must not be empty")
        for slo in slos:
            _check(_is_integral(slo), "supported_slos", f"must contain integers but contains {slo!r}")
        object.__setattr__(self, "supported_slos", frozenset(int(slo) for slo in slos))

        regions = dict(self.regions)
        _check(regions, "regions", "must not be empty")
        for region, slots in regions.items():
            _check(isinstance(region, str) and region, "regions", f"region ids must be non-empty strings but got {region!r}")
            _check(_is_integral(slots) and slots >= 0, f"regions.{region}", f"host slots must be an integer >= 0 but is {slots!r}")
        object.__setattr__(self, "regions", {region: int(regions[region]) for region in sorted(regions)})

    def capacity(self, resource):
        if resource == "cpu":
            return self.cpu_capacity
        if resource == "mem":
            return self.mem_capacity
        if resource == "tasks":
            return self.task_limit
        raise ValueError(f"unknown resource {resource!r}")

    def target(self, resource):
        if resource == "cpu":
            return self.util_target_cpu
        if resource == "mem":
            return self.util_target_mem
        if resource == "tasks":
            return self.util_target_tasks
        raise ValueError(f"unknown resource {resource!r}")

    def supports(self, slo_score):
        return slo_score in self.supported_slos


@dataclass(frozen=True)
class Snapshot:
    r"""
    The state of the cluster when balancing starts.

    A snapshot is immutable and can be shared by concurrent solver runs.

    EXAMPLES::

        >>> from sptlb.model import AppRecord, TierSpec, Snapshot
        >>> tier = TierSpec("t1", cpu_capacity=1, mem_capacity=1, task_limit=1, supported_slos=[1], regions={"r1": 1})
        >>> snapshot = Snapshot(tiers=[tier])
        >>> len(snapshot.tiers), len(snapshot.apps)
        (1, 0)
        >>> snapshot.tier("t1") is tier
        True

    TESTS:

    Apps must live on a known tier::

        >>> app = AppRecord("a", cpu_p99=0, mem_p99=0, task_count=1, slo_score=1, criticality_score=0, source_region="r1", current_tier="t9")
        >>> Snapshot(tiers=[tier], apps=[app])
        Traceback (most recent call last):
        ...
        sptlb.errors.ValidationError: apps[0].current_tier: unknown tier 't9'

    Ids are unique::

        >>> Snapshot(tiers=[tier, tier])
        Traceback (most recent call last):
        ...
        sptlb.errors.ValidationError: tiers[1].tier_id: duplicate tier id 't1'

    Lookups of unknown ids fail::

        >>> snapshot.app("nope")
        Traceback (most recent call last):
        ...
        sptlb.errors.UnknownIdError: unknown app 'nope'

    """
    tiers: tuple
    apps: tuple = ()
    latency_model: object = None
    _tiers_by_id: dict = field(init=False, repr=False, compare=False)
    _apps_by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        tiers = tuple(self.tiers)
        apps = tuple(self.apps)
        _check(tiers, "tiers", "must not be empty")

        tiers_by_id = {}
        for i, tier in enumerate(tiers):
            _check(isinstance(tier, TierSpec), f"tiers[{i}]", f"must be a TierSpec but is {type(tier).__name__}")
            _check(tier.tier_id not in tiers_by_id, f"tiers[{i}].tier_id", f"duplicate tier id {tier.tier_id!r}")
            tiers_by_id[tier.tier_id] = tier

        apps_by_id = {}
        for i, app in enumerate(apps):
            _check(isinstance(app, AppRecord), f"apps[{i}]", f"must be an AppRecord but is {type(app).__name__}")
            _check(app.app_id not in apps_by_id, f"apps[{i}].app_id", f"duplicate app id {app.app_id!r}")
            _check(app.current_tier in tiers_by_id, f"apps[{i}].current_tier", f"unknown tier {app.current_tier!r}")
            apps_by_id[app.app_id] = app

        object.__setattr__(self, "tiers", tiers)
        object.__setattr__(self, "apps", apps)
        object.__setattr__(self, "_tiers_by_id", tiers_by_id)
        object.__setattr__(self, "_apps_by_id", apps_by_id)

    def tier(self, tier_id):
        try:
            return self._tiers_by_id[tier_id]
        except KeyError:
            raise UnknownIdError("tier", tier_id)

    def app(self, app_id):
        try:
            return self._apps_by_id[app_id]
        except KeyError:
            raise UnknownIdError("app", app_id)

    def has_tier(self, tier_id):
        return tier_id in self._tiers_by_id

    def has_app(self, app_id):
        return app_id in self._apps_by_id

    @property
    def tier_ids(self):
        return tuple(tier.tier_id for tier in self.tiers)

    @property
    def app_ids(self):
        return tuple(app.app_id for app in self.apps)

    def identity(self):
        r"""
        Return the mapping that keeps every app on its current tier.
        """
        return {app.app_id: app.current_tier for app in self.apps}

    def check_slos(self, strict=False):
        r"""
        Check that every app runs on a tier that supports its SLO.

        Violations are logged as warnings, or raised if ``strict``. A balancer
        exists to repair bad states so they are accepted by default.

        EXAMPLES::

            >>> from sptlb.model import AppRecord, TierSpec, Snapshot
            >>> tier = TierSpec("t1", cpu_capacity=1, mem_capacity=1, task_limit=1, supported_slos=[1], regions={"r1": 1})
            >>> app = AppRecord("a", cpu_p99=0, mem_p99=0, task_count=1, slo_score=4, criticality_score=0, source_region="r1", current_tier="t1")
            >>> snapshot = Snapshot(tiers=[tier], apps=[app])
            >>> snapshot.check_slos()
            [0]
            >>> snapshot.check_slos(strict=True)
            Traceback (most recent call last):
            ...
            sptlb.errors.ValidationError: apps[0].slo_score: SLO 4 is not supported by tier 't1'

        """
        unsupported = []
        for i, app in enumerate(self.apps):
            if not self.tier(app.current_tier).supports(app.slo_score):
                _check(not strict, f"apps[{i}].slo_score", f"SLO {app.slo_score} is not supported by tier {app.current_tier!r}")
                logger.warning("app %r has SLO %s which its current tier %r does not support", app.app_id, app.slo_score, app.current_tier)
                unsupported.append(i)
        return unsupported


@dataclass(frozen=True)
class TierMetrics:
    r"""
    Resources used on a tier under some mapping, absolute and relative to the
    tier's own capacity.
    """
    tier_id: str
    cpu_used: float
    mem_used: float
    tasks_used: int
    app_count: int
    cpu_util: float
    mem_util: float
    task_util: float

    def used(self, resource):
        if resource == "cpu":
            return self.cpu_used
        if resource == "mem":
            return self.mem_used
        if resource == "tasks":
            return self.tasks_used
        raise ValueError(f"unknown resource {resource!r}")

    def util(self, resource):
        if resource == "cpu":
            return self.cpu_util
        if resource == "mem":
            return self.mem_util
        if resource == "tasks":
            return self.task_util
        raise ValueError(f"unknown resource {resource!r}")


def check_mapping(snapshot, mapping):
    r"""
    Check that ``mapping`` assigns every app of ``snapshot`` to a known tier.

    EXAMPLES::

        >>> from sptlb.testing import two_tier_snapshot
        >>> from sptlb.model import check_mapping
        >>> snapshot = two_tier_snapshot()
        >>> check_mapping(snapshot, {**snapshot.identity(), "x": "t1"})
        Traceback (most recent call last):
        ...
        sptlb.errors.UnknownIdError: unknown app 'x'
        >>> check_mapping(snapshot, {**snapshot.identity(), "a40": "t3"})
        Traceback (most recent call last):
        ...
        sptlb.errors.UnknownIdError: unknown tier 't3'
        >>> check_mapping(snapshot, {"a40": "t1"})
        Traceback (most recent call last):
        ...
        sptlb.errors.ValidationError: mapping: no tier for apps ['a10', 'a30']

    """
    for app_id, tier_id in mapping.items():
        if not snapshot.has_app(app_id):
            raise UnknownIdError("app", app_id)
        if not snapshot.has_tier(tier_id):
            raise UnknownIdError("tier", tier_id)
    if len(mapping) != len(snapshot.apps):
        missing = sorted(app.app_id for app in snapshot.apps if app.app_id not in mapping)
        raise ValidationError("mapping", f"no tier for apps {missing}")


def project_metrics(snapshot, mapping):
    r"""
    Return the metrics of every tier of ``snapshot`` if apps were placed
    according to ``mapping``, in the order of ``snapshot.tiers``.

    EXAMPLES:

    Moving an app shifts exactly its demand from one tier to the other::

        >>> from sptlb.testing import two_tier_snapshot
        >>> from sptlb.model import project_metrics
        >>> snapshot = two_tier_snapshot()
        >>> before = project_metrics(snapshot, snapshot.identity())
        >>> [(m.tier_id, m.cpu_used, m.app_count) for m in before]
        [('t1', 80.0, 3), ('t2', 0.0, 0)]
        >>> after = project_metrics(snapshot, {**snapshot.identity(), "a30": "t2"})
        >>> [(m.tier_id, m.cpu_used, m.tasks_used, m.cpu_util) for m in after]
        [('t1', 50.0, 2, 0.5), ('t2', 30.0, 1, 0.3)]

    TESTS:

    The used amounts always add up to the total demand::

        >>> from sptlb.testing import random_snapshot
        >>> import random
        >>> rnd = random.Random(1)
        >>> for seed in range(20):
        ...     snapshot = random_snapshot(seed)
        ...     mapping = {app.app_id: rnd.choice(snapshot.tier_ids) for app in snapshot.apps}
        ...     metrics = project_metrics(snapshot, mapping)
        ...     assert sum(m.tasks_used for m in metrics) == sum(app.task_count for app in snapshot.apps)
        ...     assert abs(sum(m.cpu_used for m in metrics) - sum(app.cpu_p99 for app in snapshot.apps)) < 1e-9
        ...     assert sum(m.app_count for m in metrics) == len(snapshot.apps)

    """
    check_mapping(snapshot, mapping)

    cpu = {tier.tier_id: 0. for tier in snapshot.tiers}
    mem = dict(cpu)
    tasks = {tier.tier_id: 0 for tier in snapshot.tiers}
    count = dict(tasks)
    for app in snapshot.apps:
        tier_id = mapping[app.app_id]
        cpu[tier_id] += app.cpu_p99
        mem[tier_id] += app.mem_p99
        tasks[tier_id] += app.task_count
        count[tier_id] += 1

    return [TierMetrics(
        tier_id=tier.tier_id,
        cpu_used=cpu[tier.tier_id],
        mem_used=mem[tier.tier_id],
        tasks_used=tasks[tier.tier_id],
        app_count=count[tier.tier_id],
        cpu_util=cpu[tier.tier_id] / tier.cpu_capacity,
        mem_util=mem[tier.tier_id] / tier.mem_capacity,
        task_util=tasks[tier.tier_id] / tier.task_limit) for tier in snapshot.tiers]


def imbalance(metrics, resource):
    r"""
    Return how unbalanced ``resource`` is across the tiers in ``metrics``,
    i.e., the spread between the highest and the lowest utilization.

    EXAMPLES::

        >>> from sptlb.model import TierMetrics, imbalance
        >>> def metrics(*utils):
        ...     return [TierMetrics(f"t{i}", 0, 0, 0, 0, cpu_util=u, mem_util=.5, task_util=0) for i, u in enumerate(utils)]
        >>> imbalance(metrics(.9, .5, .7), "cpu")
        0.4
        >>> imbalance(metrics(.9, .5, .7), "mem")
        0.0

    TESTS::

        >>> imbalance([], "cpu")
        Traceback (most recent call last):
        ...
        sptlb.errors.ValidationError: metrics: must not be empty

        >>> import random
        >>> rnd = random.Random(5)
        >>> for _ in range(100):
        ...     utils = [rnd.random() for _ in range(5)]
        ...     assert imbalance(metrics(*utils), "cpu") == max(utils) - min(utils)
        ...     rnd.shuffle(utils)
        ...     assert imbalance(metrics(*utils), "cpu") == max(utils) - min(utils)

    """
    _check(len(metrics) > 0, "metrics", "must not be empty")
    if resource not in RESOURCES:
        raise ValueError(f"unknown resource {resource!r}")
    utils = [m.util(resource) for m in metrics]
    return max(utils) - min(utils)
