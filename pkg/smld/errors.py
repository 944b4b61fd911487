"""Base exceptions for smld.

Operations raise a :class:`ContractError` subclass when a mathematical
precondition does not hold for the given input and an :class:`InvariantError`
subclass when an internal consistency check fails. The concrete classes are
declared in the module that raises them.
"""


class SMLDError(Exception):
    pass


class ContractError(SMLDError):
    """A mathematical precondition of an operation was violated."""


class InvariantError(SMLDError):
    """Results failed an internal consistency check, always a bug signal."""
