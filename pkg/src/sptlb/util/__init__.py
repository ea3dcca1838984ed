r"""
Small helpers shared by the solvers, the evaluation and the command line.
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

import hashlib
import math
import time

import numpy


SEED_MASK = (1 << 64) - 1


def derive_rng(seed, *labels):
    r"""
    Return a random generator for the sub-stream of ``seed`` named by ``labels``.

    Streams with different labels are independent, so adding a new consumer
    of randomness does not change what existing consumers draw.

    EXAMPLES::

        >>> from sptlb.util import derive_rng
        >>> bool(derive_rng(7, "latency", "no_cnst").integers(1 << 30) == derive_rng(7, "latency", "no_cnst").integers(1 << 30))
        True
        >>> bool(derive_rng(7, "latency", "no_cnst").integers(1 << 30) == derive_rng(7, "latency", "w_cnst").integers(1 << 30))
        False

    Negative and oversized seeds are folded into 64 bits::

        >>> bool(derive_rng(-1, "x").integers(1 << 30) == derive_rng((1 << 64) - 1, "x").integers(1 << 30))
        True

    """
    label = "/".join(str(label) for label in labels).encode("utf-8")
    digest = hashlib.blake2b(label, digest_size=8).digest()
    return numpy.random.default_rng(numpy.random.SeedSequence([int(seed) & SEED_MASK, int.from_bytes(digest, "little")]))


def round_half_up(value):
    r"""
    Round ``value`` to the nearest integer, halves away from zero for
    non-negative values.

    Unlike Python's :func:`round`, this does not round to even.

    EXAMPLES::

        >>> from sptlb.util import round_half_up
        >>> round_half_up(2.5), round(2.5)
        (3, 2)
        >>> round_half_up(6.49)
        6
        >>> round_half_up(0)
        0

    """
    return int(math.floor(value + 0.5))


class Deadline:
    r"""
    A cooperative timeout that solvers poll at iteration boundaries.

    EXAMPLES::

        >>> from sptlb.util import Deadline
        >>> deadline = Deadline(30)
        >>> deadline.expired()
        False
        >>> 0 < deadline.remaining() <= 30
        True

    A deadline can be shared; a nested deadline never outlives its parent::

        >>> inner = deadline.nested(3600)
        >>> inner.expires == deadline.expires
        True
        >>> deadline.nested(0).expires <= deadline.expires
        True

    """

    def __init__(self, seconds, clock=time.perf_counter):
        self._clock = clock
        self.started = clock()
        self.expires = self.started + seconds

    def expired(self):
        return self._clock() >= self.expires

    def remaining(self):
        return max(0., self.expires - self._clock())

    def elapsed(self):
        return self._clock() - self.started

    def nested(self, seconds):
        nested = Deadline(seconds, clock=self._clock)
        nested.expires = min(nested.expires, self.expires)
        return nested
