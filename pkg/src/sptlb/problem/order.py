r"""
The lexicographic order on goal scores.

Goals are compared one after another in priority order; a later goal only
matters when all earlier goals tie. Real valued components are compared with
an absolute tolerance so that rounding noise does not decide between two
otherwise equal mappings.

EXAMPLES::

    >>> from sptlb.problem.order import ScoreVector, compare
    >>> a = ScoreVector(0, .3, .2, 10, 5)
    >>> b = ScoreVector(.1, 0, 0, 0, 0)
    >>> compare(a, b)
    -1
    >>> compare(b, a)
    1
    >>> compare(a, ScoreVector(1e-12, .3, .2, 10, 5))
    0

Changing the priorities changes the verdict::

    >>> compare(a, b, ["g8_movement_cost", "g5_over_target", "g6_resource_imbalance", "g7_task_imbalance", "g9_critical_moves"])
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

import functools
from dataclasses import dataclass, field

TOLERANCE = 1e-9

GOALS = ("g5_over_target", "g6_resource_imbalance", "g7_task_imbalance", "g8_movement_cost", "g9_critical_moves")


@dataclass(frozen=True)
class ScoreVector:
    r"""
    How well a mapping meets each goal; smaller is better for every component.

    ``feasible`` records whether the scored mapping satisfied all constraints;
    it does not take part in comparisons.
    """
    g5_over_target: float
    g6_resource_imbalance: float
    g7_task_imbalance: float
    g8_movement_cost: int
    g9_critical_moves: float
    feasible: bool = field(default=True, compare=False)

    def key(self, priorities=GOALS):
        r"""
        Return the components of this vector in the order of ``priorities``.

        EXAMPLES::

            >>> from sptlb.problem.order import ScoreVector
            >>> ScoreVector(1, 2, 3, 4, 5).key(["g9_critical_moves", "g5_over_target"])
            (5, 1)

        """
        return tuple(getattr(self, goal) for goal in priorities)

    def as_dict(self):
        return {goal: getattr(self, goal) for goal in GOALS}


def compare_keys(a, b):
    r"""
    Compare two keys lexicographically with :data:`TOLERANCE`.

    Return a negative number if ``a`` is better, a positive number if ``b``
    is better, and zero if they tie.

    EXAMPLES::

        >>> from sptlb.problem.order import compare_keys
        >>> compare_keys((0, 5), (0, 4))
        1
        >>> compare_keys((), ())
        0

    """
    for x, y in zip(a, b):
        if x < y - TOLERANCE:
            return -1
        if x > y + TOLERANCE:
            return 1
    return 0


def compare(a, b, priorities=GOALS):
    r"""
    Compare the score vectors ``a`` and ``b`` lexicographically in the order
    of ``priorities``.

    Returns ``-1`` if ``a`` precedes (is better than) ``b``, ``1`` if ``b``
    precedes ``a``, and ``0`` on a tie.

    TESTS:

    The result agrees with a naive component-wise comparison, and the order
    is antisymmetric and transitive on random vectors::

        >>> import random
        >>> from sptlb.problem.order import ScoreVector, compare, GOALS
        >>> rnd = random.Random(0)
        >>> def vector():
        ...     return ScoreVector(*[rnd.choice([0, .5, 1]) for _ in range(3)], rnd.choice([0, 1]), rnd.choice([0, .5]))
        >>> def naive(a, b):
        ...     for goal in GOALS:
        ...         if getattr(a, goal) != getattr(b, goal):
        ...             return -1 if getattr(a, goal) < getattr(b, goal) else 1
        ...     return 0
        >>> for _ in range(300):
        ...     a, b, c = vector(), vector(), vector()
        ...     assert compare(a, b) == naive(a, b)
        ...     assert compare(a, b) == -compare(b, a)
        ...     if compare(a, b) <= 0 and compare(b, c) <= 0:
        ...         assert compare(a, c) <= 0

    Sorting with the order::

        >>> from sptlb.problem.order import sort_key
        >>> sorted([ScoreVector(1, 0, 0, 0, 0), ScoreVector(0, 1, 0, 0, 0)], key=sort_key())
        [ScoreVector(g5_over_target=0, g6_resource_imbalance=1, g7_task_imbalance=0, g8_movement_cost=0, g9_critical_moves=0, feasible=True), ScoreVector(g5_over_target=1, g6_resource_imbalance=0, g7_task_imbalance=0, g8_movement_cost=0, g9_critical_moves=0, feasible=True)]

    """
    return compare_keys(a.key(priorities), b.key(priorities))


def sort_key(priorities=GOALS):
    r"""
    Return a key function to sort score vectors best first.
    """
    return functools.cmp_to_key(lambda a, b: compare(a, b, priorities))
