r"""
Exceptions raised by sptlb.

All errors derive from :class:`SptlbError` so that callers, in particular the
command line interface, can tell our own failures from bugs.

EXAMPLES::

    >>> from sptlb.errors import ValidationError
    >>> error = ValidationError("apps[3].current_tier", "unknown tier 't9'")
    >>> str(error)
    "apps[3].current_tier: unknown tier 't9'"
    >>> isinstance(error, ValueError)
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


class SptlbError(Exception):
    r"""
    Base class of all errors raised by this package.
    """


class ValidationError(SptlbError, ValueError):
    r"""
    Input data violates an invariant.

    The ``path`` names the offending field, e.g., ``tiers[0].cpu_capacity``.
    """

    def __init__(self, path, message):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)

    def within(self, prefix):
        r"""
        Return a copy of this error whose path is nested below ``prefix``.

        EXAMPLES::

            >>> from sptlb.errors import ValidationError
            >>> ValidationError("cpu_p99", "must be non-negative").within("apps[2]").path
            'apps[2].cpu_p99'

        """
        return type(self)(f"{prefix}.{self.path}" if self.path else prefix, self.message)


class SnapshotParseError(ValidationError):
    r"""
    A snapshot or solution file could not be parsed at all.
    """


class GeneratorError(ValidationError):
    r"""
    A :class:`sptlb.generator.GeneratorSpec` cannot produce a valid snapshot.
    """


class UnknownIdError(SptlbError, LookupError):
    r"""
    An app or tier id does not exist in the snapshot.

    EXAMPLES::

        >>> from sptlb.errors import UnknownIdError
        >>> str(UnknownIdError("tier", "t9"))
        "unknown tier 't9'"

    """

    def __init__(self, kind, id):
        self.kind = kind
        self.id = id
        super().__init__(f"unknown {kind} {id!r}")

    def __str__(self):
        return self.args[0]


class Infeasible(SptlbError):
    r"""
    A solver could not produce a mapping that satisfies all constraints.

    The best mapping found is available as ``best_effort``, a
    :class:`sptlb.solvers.Solution` whose ``violations`` are not empty (or
    ``None`` if nothing was found at all.)
    """

    def __init__(self, message, best_effort=None, violations=()):
        self.best_effort = best_effort
        self.violations = tuple(violations)
        super().__init__(message)


class ModelIncomplete(SptlbError):
    r"""
    The latency model has no distribution for a region pair that is needed.
    """

    def __init__(self, source, dest):
        self.source = source
        self.dest = dest
        super().__init__(f"latency model has no distribution for {source!r} -> {dest!r}")


class SnapshotMismatch(SptlbError, ValueError):
    r"""
    Two objects that should refer to the same snapshot do not.
    """


class SolverContractError(SptlbError, RuntimeError):
    r"""
    A solver returned a result that it must never return, such as a move it
    was told to avoid.

    EXAMPLES::

        >>> from sptlb.errors import SolverContractError
        >>> isinstance(SolverContractError("oops"), RuntimeError)
        True

    """
