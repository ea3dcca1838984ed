r"""
Synthetic snapshots.

The generator stands in for collecting the state of a live cluster. It draws
tiers, apps and a latency model from a single seed and places the apps on
tiers that support their SLO, optionally favoring one hot tier.

Regions are split into zones; every tier has hosts in all regions of one
zone, so tiers in the same zone overlap completely and tiers in different
zones not at all. Apps read from a region of the tier they run on.

EXAMPLES::

    >>> from sptlb.generator import GeneratorSpec, generate
    >>> snapshot = generate(GeneratorSpec(tier_count=5, app_count=100, seed=1))
    >>> snapshot.tier_ids
    ('t1', 't2', 't3', 't4', 't5')
    >>> len(snapshot.apps)
    100
    >>> [sorted(tier.regions) for tier in snapshot.tiers]
    [['r1', 'r3'], ['r2', 'r4'], ['r1', 'r3'], ['r2', 'r4'], ['r1', 'r3']]
    >>> all(app.source_region in snapshot.tier(app.current_tier).regions for app in snapshot.apps)
    True

By default, the SLO classes 1 and 2 run on the first three tiers, class 3
runs everywhere and class 4 only on the last two tiers::

    >>> [sorted(tier.supported_slos) for tier in snapshot.tiers]
    [[1, 2, 3], [1, 2, 3], [1, 2, 3], [3, 4], [3, 4]]
    >>> all(snapshot.tier(app.current_tier).supports(app.slo_score) for app in snapshot.apps)
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
import math
from dataclasses import dataclass, field

from .errors import GeneratorError
from .evaluation.latency import LatencyDistribution, LatencyModel
from .model import AppRecord, Snapshot, TierSpec
from .util import derive_rng

logger = logging.getLogger(__name__)

# SLO class to the (1-based) tiers that support it.
DEFAULT_SLO_LAYOUT = {1: (1, 2, 3), 2: (1, 2, 3), 3: (1, 2, 3, 4, 5), 4: (4, 5)}


def default_slo_layout(tier_count):
    r"""
    Return the default SLO layout for ``tier_count`` tiers.

    Tiers beyond the fifth support every class; classes without any tier
    are dropped.

    EXAMPLES::

        >>> from sptlb.generator import default_slo_layout
        >>> default_slo_layout(2)
        {1: ('t1', 't2'), 2: ('t1', 't2'), 3: ('t1', 't2')}
        >>> default_slo_layout(6)[4]
        ('t4', 't5', 't6')

    """
    layout = {}
    for slo, tiers in DEFAULT_SLO_LAYOUT.items():
        ids = [f"t{i}" for i in tiers if i <= tier_count] + [f"t{i}" for i in range(6, tier_count + 1)]
        if ids:
            layout[slo] = tuple(ids)
    return layout


@dataclass(frozen=True)
class GeneratorSpec:
    r"""
    What to generate.

    ``hot_tier_index`` is the 0-based position of the tier that apps are
    ``skew`` times more likely to be placed on. Capacities are drawn once
    the apps are placed: a tier gets ``capacity_scale`` times its fair share
    of the total demand, but never less than ``headroom`` times what runs on
    it already. So every generated snapshot satisfies its capacities, and
    with the default scale an even spread fills tiers to about half.

    The ``region_count`` regions are split round robin into ``zone_count``
    zones, as are the tiers.

    TESTS::

        >>> from sptlb.generator import GeneratorSpec
        >>> GeneratorSpec(tier_count=0)
        Traceback (most recent call last):
        ...
        sptlb.errors.GeneratorError: tier_count: must be at least 1 but is 0
        >>> GeneratorSpec(tier_count=3, hot_tier_index=3)
        Traceback (most recent call last):
        ...
        sptlb.errors.GeneratorError: hot_tier_index: must be in [0, 2] but is 3
        >>> GeneratorSpec(headroom=.9)
        Traceback (most recent call last):
        ...
        sptlb.errors.GeneratorError: headroom: must be at least 1 but is 0.9
        >>> GeneratorSpec(tier_count=2, slo_layout={1: ["t3"]})
        Traceback (most recent call last):
        ...
        sptlb.errors.GeneratorError: slo_layout.1: unknown tier 't3'
        >>> GeneratorSpec(tier_count=2, slo_layout={1: ["t1"]})
        Traceback (most recent call last):
        ...
        sptlb.errors.GeneratorError: slo_layout: tier 't2' supports no SLO
        >>> GeneratorSpec(tier_count=2, slo_layout={1: ["t1", "t2"], 2: []})
        Traceback (most recent call last):
        ...
        sptlb.errors.GeneratorError: slo_layout.2: no tier supports SLO 2

    """
    tier_count: int = 5
    app_count: int = 100
    region_count: int = 4
    zone_count: int = 2
    hot_tier_index: int = None
    slo_layout: dict = None
    seed: int = 0
    skew: float = 2.
    capacity_scale: tuple = (1.8, 2.2)
    headroom: float = 1.1
    cpu_demand: tuple = (1., 20.)
    mem_demand: tuple = (1., 20.)
    task_demand: tuple = (1, 8)
    criticality: tuple = (0., 10.)
    intra_region_ms: tuple = (1., 1.)
    cross_region_ms: tuple = (40., 100.)
    relative_stddev: float = .1
    tier_ids: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        def check(condition, name, message):
            if not condition:
                raise GeneratorError(name, f"{message} but is {getattr(self, name)!r}")

        check(self.tier_count >= 1, "tier_count", "must be at least 1")
        check(self.app_count >= 0, "app_count", "must be non-negative")
        check(self.region_count >= 1, "region_count", "must be at least 1")
        check(self.zone_count >= 1, "zone_count", "must be at least 1")
        check(self.hot_tier_index is None or 0 <= self.hot_tier_index < self.tier_count, "hot_tier_index", f"must be in [0, {self.tier_count - 1}]")
        check(self.skew >= 1, "skew", "must be at least 1")
        check(self.headroom >= 1, "headroom", "must be at least 1")
        for name in ("capacity_scale", "cpu_demand", "mem_demand", "task_demand", "criticality", "intra_region_ms", "cross_region_ms"):
            low, high = getattr(self, name)
            check(0 <= low <= high, name, "must be a range of non-negative numbers")
        check(self.capacity_scale[0] > 0, "capacity_scale", "must be positive")
        check(self.task_demand[0] >= 1, "task_demand", "must start at 1 or more")
        check(self.intra_region_ms[1] <= self.cross_region_ms[0], "cross_region_ms", "must not be below intra_region_ms")

        tier_ids = tuple(f"t{i + 1}" for i in range(self.tier_count))
        object.__setattr__(self, "tier_ids", tier_ids)

        layout = default_slo_layout(self.tier_count) if self.slo_layout is None else self.slo_layout
        layout = {int(slo): tuple(tiers) for slo, tiers in layout.items()}
        for slo, tiers in layout.items():
            if not tiers:
                raise GeneratorError(f"slo_layout.{slo}", f"no tier supports SLO {slo}")
            for tier_id in tiers:
                if tier_id not in tier_ids:
                    raise GeneratorError(f"slo_layout.{slo}", f"unknown tier {tier_id!r}")
        for tier_id in tier_ids:
            if not any(tier_id in tiers for tiers in layout.values()):
                raise GeneratorError("slo_layout", f"tier {tier_id!r} supports no SLO")
        object.__setattr__(self, "slo_layout", layout)

    def zones(self):
        r"""
        Return the regions of each zone.

        EXAMPLES::

            >>> from sptlb.generator import GeneratorSpec
            >>> GeneratorSpec(region_count=5, zone_count=2).zones()
            [['r1', 'r3', 'r5'], ['r2', 'r4']]
            >>> GeneratorSpec(region_count=1, zone_count=2).zones()
            [['r1']]

        """
        count = min(self.zone_count, self.region_count)
        return [[f"r{i + 1}" for i in range(zone, self.region_count, count)] for zone in range(count)]


def _uniform(rng, bounds):
    low, high = bounds
    return round(float(rng.uniform(low, high)), 1)


def _round_up(value):
    return max(1., math.ceil(round(value * 10, 6)) / 10)


def _place(spec, tier_regions, rng):
    r"""
    Return the apps of ``spec`` and the demand per tier they amount to.
    """
    slos = sorted(spec.slo_layout)
    weights = [spec.skew if i == spec.hot_tier_index else 1. for i in range(spec.tier_count)]
    used = [{"cpu": 0., "mem": 0., "tasks": 0} for _ in spec.tier_ids]

    width = len(str(max(spec.app_count, 1)))
    apps = []
    for i in range(spec.app_count):
        slo = int(rng.choice(slos))
        demand = {"cpu": _uniform(rng, spec.cpu_demand), "mem": _uniform(rng, spec.mem_demand), "tasks": int(rng.integers(spec.task_demand[0], spec.task_demand[1] + 1))}

        candidates = [j for j, tier_id in enumerate(spec.tier_ids) if tier_id in spec.slo_layout[slo]]
        p = [weights[j] for j in candidates]
        j = candidates[int(rng.choice(len(candidates), p=[w / sum(p) for w in p]))]
        for resource in demand:
            used[j][resource] += demand[resource]

        apps.append(AppRecord(
            f"a{i:0{width}d}",
            cpu_p99=demand["cpu"],
            mem_p99=demand["mem"],
            task_count=demand["tasks"],
            slo_score=slo,
            criticality_score=_uniform(rng, spec.criticality),
            source_region=str(rng.choice(tier_regions[j])),
            current_tier=spec.tier_ids[j]))
    return apps, used


def _tiers(spec, tier_regions, used, rng):
    share = max(spec.app_count, 1) / spec.tier_count
    fair = {resource: sum(u[resource] for u in used) / spec.tier_count for resource in ("cpu", "mem", "tasks")}

    def capacity(j, resource):
        return max(fair[resource] * float(rng.uniform(*spec.capacity_scale)), used[j][resource] * spec.headroom)

    tiers = []
    for j, tier_id in enumerate(spec.tier_ids):
        regions = tier_regions[j]
        tiers.append(TierSpec(
            tier_id,
            cpu_capacity=_round_up(capacity(j, "cpu")),
            mem_capacity=_round_up(capacity(j, "mem")),
            task_limit=max(1, int(math.ceil(round(capacity(j, "tasks"), 6)))),
            supported_slos=[slo for slo, ids in spec.slo_layout.items() if tier_id in ids],
            regions={region: int(math.ceil(share / len(regions))) + int(rng.integers(0, 3)) for region in regions}))
    return tiers


def _latency_model(spec, regions):
    r"""
    Return a symmetric model in which every region is closer to itself than
    to any other region.
    """
    rng = derive_rng(spec.seed, "generate", "latency")
    pairs = {}
    for i, source in enumerate(regions):
        for dest in regions[i:]:
            mean = _uniform(rng, spec.intra_region_ms if source == dest else spec.cross_region_ms)
            pairs[(source, dest)] = LatencyDistribution(mean, round(mean * spec.relative_stddev, 2))
    return LatencyModel(pairs)


def generate(spec):
    r"""
    Return the snapshot described by ``spec``.

    EXAMPLES:

    An empty workload is a valid snapshot::

        >>> from sptlb.generator import GeneratorSpec, generate
        >>> len(generate(GeneratorSpec(app_count=0)).apps)
        0

    The hot tier starts out above the others::

        >>> from sptlb.model import project_metrics
        >>> snapshot = generate(GeneratorSpec(tier_count=5, app_count=200, hot_tier_index=2, seed=3))
        >>> utils = [metrics.cpu_util for metrics in project_metrics(snapshot, snapshot.identity())]
        >>> utils[2] == max(utils)
        True

    Same spec, same snapshot::

        >>> from sptlb.files.snapshot import dump_snapshot
        >>> spec = GeneratorSpec(tier_count=4, app_count=50, seed=11)
        >>> dump_snapshot(generate(spec)) == dump_snapshot(generate(spec))
        True

    TESTS:

    Generated snapshots come with a latency model that covers all regions,
    and they survive a round trip through a file::

        >>> import io
        >>> from sptlb.files.snapshot import load_snapshot
        >>> for seed in range(5):
        ...     snapshot = generate(GeneratorSpec(tier_count=3, app_count=40, region_count=5, seed=seed))
        ...     model = snapshot.latency_model
        ...     assert all(model.mean(a, a) <= model.mean(a, b) for a in model.regions() for b in model.regions())
        ...     assert load_snapshot(io.StringIO(dump_snapshot(snapshot)), strict=True) == snapshot

    Any valid spec can be generated, and the current placement satisfies all
    capacities::

        >>> from sptlb.problem import RunConfig, compile_problem, is_feasible
        >>> for seed in range(60):
        ...     tier_count = 2 + seed % 5
        ...     spec = GeneratorSpec(tier_count=tier_count, app_count=5 + 7 * seed, hot_tier_index=seed % tier_count, seed=seed)
        ...     snapshot = generate(spec)
        ...     assert is_feasible(compile_problem(snapshot, RunConfig()), snapshot.identity()).feasible, seed
        >>> len(generate(GeneratorSpec(tier_count=4, app_count=20, hot_tier_index=1, seed=11)).apps)
        20

    """
    zones = spec.zones()
    tier_regions = [zones[j % len(zones)] for j in range(spec.tier_count)]
    apps, used = _place(spec, tier_regions, derive_rng(spec.seed, "generate", "apps"))
    tiers = _tiers(spec, tier_regions, used, derive_rng(spec.seed, "generate", "tiers"))
    regions = [f"r{i + 1}" for i in range(spec.region_count)]

    snapshot = Snapshot(tiers, apps, _latency_model(spec, regions))
    logger.info("generated %d apps on %d tiers across %d regions in %d zones", len(apps), len(tiers), len(regions), len(zones))
    return snapshot
