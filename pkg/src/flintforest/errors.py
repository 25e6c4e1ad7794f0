"""Exception types shared across the package."""


class FlintForestError(Exception):
    """Base class for errors raised by this package."""


class ModelValidationError(FlintForestError):
    """A forest (or one of its nodes) violates a structural invariant.

    ``tree_index`` and ``node_index`` locate the offending node when known.
    """

    def __init__(self, message, tree_index=None, node_index=None):
        location = ""
        if tree_index is not None:
            location = f", tree {tree_index}"
            if node_index is not None:
                location += f" node {node_index}"
        super().__init__(message + location)
        self.tree_index = tree_index
        self.node_index = node_index


class DatasetError(FlintForestError):
    """A dataset file could not be parsed or violates an invariant."""

    def __init__(self, message, row=None, col=None):
        parts = [message]
        if row is not None:
            parts.append(f"row {row}")
        if col is not None:
            parts.append(f"col {col}")
        super().__init__(", ".join(parts))
        self.row = row
        self.col = col


class FormatTooLargeError(FlintForestError):
    """An exhaustive check was requested for a format beyond the pair-enumeration bound."""


class BenchError(FlintForestError):
    """A benchmark configuration or run failed."""
