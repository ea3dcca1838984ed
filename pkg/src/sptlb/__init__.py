r"""
A multi-objective load balancer that assigns stream processing apps to tiers.

EXAMPLES::

    >>> import io
    >>> import sptlb
    >>> from sptlb.testing import two_tier_snapshot
    >>> from sptlb.files.snapshot import dump_snapshot
    >>> sptlb.load_snapshot(io.StringIO(dump_snapshot(two_tier_snapshot()))).tier_ids
    ('t1', 't2')

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

from .files.snapshot import load_snapshot
