r"""
Reading and writing snapshot files.

A snapshot file is YAML with a versioned header. Its fields mirror
:class:`sptlb.model.TierSpec` and :class:`sptlb.model.AppRecord`; a latency
model between regions is optional.

EXAMPLES::

    >>> import io
    >>> from sptlb.files.snapshot import load_snapshot
    >>> snapshot = load_snapshot(io.StringIO('''
    ... format: sptlb-snapshot v1
    ... tiers:
    ... - tier_id: t1
    ...   cpu_capacity: 100
    ...   mem_capacity: 100
    ...   task_limit: 10
    ...   supported_slos: [1, 2]
    ...   regions: {rA: 2}
    ... apps:
    ... - app_id: a
    ...   cpu_p99: 12.5
    ...   mem_p99: 3
    ...   task_count: 2
    ...   slo_score: 1
    ...   criticality_score: 0
    ...   source_region: rA
    ...   current_tier: t1
    ... '''))
    >>> snapshot.tier("t1").util_target_tasks, snapshot.app("a").cpu_p99
    (0.8, 12.5)

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

import io
import logging
import os

from ruamel.yaml import YAML
from ruamel.yaml.error import YAMLError

from ..errors import SnapshotParseError, ValidationError
from ..evaluation.latency import LatencyDistribution, LatencyModel
from ..model import AppRecord, Snapshot, TierSpec

logger = logging.getLogger(__name__)

FORMAT = "sptlb-snapshot v1"

TIER_FIELDS = ("tier_id", "cpu_capacity", "mem_capacity", "task_limit", "util_target_cpu", "util_target_mem", "util_target_tasks", "supported_slos", "regions")
TIER_OPTIONAL = ("util_target_cpu", "util_target_mem", "util_target_tasks")
APP_FIELDS = ("app_id", "cpu_p99", "mem_p99", "task_count", "slo_score", "criticality_score", "source_region", "current_tier")
PAIR_FIELDS = ("source", "dest", "mean_ms", "stddev_ms")


def _read(source):
    if hasattr(source, "read"):
        return source.read()
    with open(source, encoding="utf-8") as stream:
        return stream.read()


def _fields(record, path, fields, optional=()):
    r"""
    Return the ``fields`` of the mapping ``record`` as keyword arguments.

    TESTS::

        >>> from sptlb.files.snapshot import _fields
        >>> _fields({"a": 1, "c": 2}, "x[0]", ("a", "b"))
        Traceback (most recent call last):
        ...
        sptlb.errors.ValidationError: x[0]: unknown field 'c'
        >>> _fields({"a": 1}, "x[0]", ("a", "b"))
        Traceback (most recent call last):
        ...
        sptlb.errors.ValidationError: x[0].b: missing

    """
    if not isinstance(record, dict):
        raise ValidationError(path, f"must be a mapping but is {record!r}")
    for key in record:
        if key not in fields:
            raise ValidationError(path, f"unknown field {key!r}")
    for key in fields:
        if key not in record and key not in optional:
            raise ValidationError(f"{path}.{key}", "missing")
    return {key: record[key] for key in fields if key in record}


def _list(document, key):
    value = document.get(key)
    if value is None:
        return []
    if not isinstance(value, list):
        raise ValidationError(key, f"must be a list but is {value!r}")
    return value


def _latency_model(latency):
    if not isinstance(latency, dict):
        raise ValidationError("latency", f"must be a mapping but is {latency!r}")
    unknown = set(latency) - {"symmetric", "pairs"}
    if unknown:
        raise ValidationError("latency", f"unknown field {sorted(unknown)[0]!r}")
    pairs = {}
    for i, record in enumerate(_list(latency, "pairs")):
        path = f"latency.pairs[{i}]"
        record = _fields(record, path, PAIR_FIELDS, optional=("stddev_ms",))
        key = (str(record["source"]), str(record["dest"]))
        if key in pairs:
            raise ValidationError(path, f"duplicate region pair {key[0]!r} -> {key[1]!r}")
        try:
            pairs[key] = LatencyDistribution(record["mean_ms"], record.get("stddev_ms", 0.))
        except ValidationError as e:
            raise e.within(path)
    return LatencyModel(pairs, symmetric=bool(latency.get("symmetric", True)))


def load_snapshot(source, strict=False):
    r"""
    Return the :class:`sptlb.model.Snapshot` stored in ``source``, a path or
    a text stream.

    Apps that run on a tier that does not support their SLO are reported as
    warnings or, if ``strict``, rejected.

    TESTS:

    Errors name the offending field::

        >>> import io
        >>> from sptlb.files.snapshot import load_snapshot
        >>> load_snapshot(io.StringIO("format: sptlb-snapshot v1\ntiers:\n- tier_id: t1\n  cpu_capacity: -1\n  mem_capacity: 1\n  task_limit: 1\n  supported_slos: [1]\n  regions: {r: 1}\n"))
        Traceback (most recent call last):
        ...
        sptlb.errors.ValidationError: tiers[0].cpu_capacity: must be positive but is -1

        >>> load_snapshot(io.StringIO("format: sptlb-snapshot v2\ntiers: []\n"))
        Traceback (most recent call last):
        ...
        sptlb.errors.SnapshotParseError: format: expected 'sptlb-snapshot v1' but found 'sptlb-snapshot v2'

        >>> load_snapshot(io.StringIO("format: [unclosed\n"))
        Traceback (most recent call last):
        ...
        sptlb.errors.SnapshotParseError: not a YAML document: ...

    Unknown tiers are rejected with the path of the app::

        >>> from sptlb.testing import two_tier_snapshot
        >>> from sptlb.files.snapshot import dump_snapshot
        >>> text = dump_snapshot(two_tier_snapshot()).replace("current_tier: t1", "current_tier: t9", 1)
        >>> load_snapshot(io.StringIO(text))
        Traceback (most recent call last):
        ...
        sptlb.errors.ValidationError: apps[0].current_tier: unknown tier 't9'

    """
    try:
        document = YAML(typ="safe", pure=True).load(_read(source))
    except YAMLError as e:
        raise SnapshotParseError("", f"not a YAML document: {e}")

    if not isinstance(document, dict):
        raise SnapshotParseError("", "not a snapshot document")
    if document.get("format") != FORMAT:
        raise SnapshotParseError("format", f"expected {FORMAT!r} but found {document.get('format')!r}")
    unknown = set(document) - {"format", "tiers", "apps", "latency"}
    if unknown:
        raise ValidationError("", f"unknown field {sorted(unknown)[0]!r}")

    tiers = []
    for i, record in enumerate(_list(document, "tiers")):
        path = f"tiers[{i}]"
        try:
            tiers.append(TierSpec(**_fields(record, path, TIER_FIELDS, TIER_OPTIONAL)))
        except ValidationError as e:
            raise e if e.path.startswith(path) else e.within(path)

    apps = []
    for i, record in enumerate(_list(document, "apps")):
        path = f"apps[{i}]"
        try:
            apps.append(AppRecord(**_fields(record, path, APP_FIELDS)))
        except ValidationError as e:
            raise e if e.path.startswith(path) else e.within(path)

    latency_model = None
    if document.get("latency") is not None:
        latency_model = _latency_model(document["latency"])

    snapshot = Snapshot(tiers, apps, latency_model)
    snapshot.check_slos(strict=strict)
    logger.info("loaded snapshot with %d tiers and %d apps", len(snapshot.tiers), len(snapshot.apps))
    return snapshot


def _document(snapshot):
    document = {"format": FORMAT, "tiers": [], "apps": []}
    for tier in snapshot.tiers:
        record = {name: getattr(tier, name) for name in TIER_FIELDS}
        record["supported_slos"] = sorted(tier.supported_slos)
        record["regions"] = dict(tier.regions)
        document["tiers"].append(record)
    for app in snapshot.apps:
        document["apps"].append({name: getattr(app, name) for name in APP_FIELDS})
    model = snapshot.latency_model
    if model is not None:
        document["latency"] = {
            "symmetric": model.symmetric,
            "pairs": [{"source": source, "dest": dest, "mean_ms": distribution.mean_ms, "stddev_ms": distribution.stddev_ms} for (source, dest), distribution in model.pairs.items()],
        }
    return document


def dump_snapshot(snapshot, target=None):
    r"""
    Write ``snapshot`` to ``target``, a path or a text stream, or return it
    as a string if no ``target`` is given.

    EXAMPLES::

        >>> from sptlb.testing import two_tier_snapshot
        >>> from sptlb.files.snapshot import dump_snapshot
        >>> lines = dump_snapshot(two_tier_snapshot()).splitlines()
        >>> lines[:3]
        ['format: sptlb-snapshot v1', 'tiers:', '- tier_id: t1']
        >>> [line for line in lines if line.startswith("- ")]
        ['- tier_id: t1', '- tier_id: t2', '- app_id: a40', '- app_id: a30', '- app_id: a10']
        >>> "  regions: {r1: 1}" in lines
        True

    TESTS:

    Loading a dumped snapshot gives back the same snapshot::

        >>> import io
        >>> from sptlb.files.snapshot import load_snapshot
        >>> from sptlb.testing import latency_snapshot, random_snapshot
        >>> for snapshot in [two_tier_snapshot(), latency_snapshot()] + [random_snapshot(seed, latency=True) for seed in range(10)]:
        ...     assert load_snapshot(io.StringIO(dump_snapshot(snapshot))) == snapshot

    """
    yaml = YAML()
    yaml.default_flow_style = None
    yaml.indent(mapping=2, sequence=2, offset=0)
    document = _document(snapshot)

    if target is None:
        buffer = io.StringIO()
        yaml.dump(document, buffer)
        return buffer.getvalue()
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", encoding="utf-8") as stream:
            yaml.dump(document, stream)
    else:
        yaml.dump(document, target)
