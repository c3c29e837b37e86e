"""
Soliton Workbench - Errors
Exception types shared by the services

Contract violations subclass ValueError so callers can keep the usual
`except ValueError` handling (HTTP 400 / CLI exit 2).
"""

from typing import Dict, Optional


class WorkbenchError(Exception):
    """Base class for every error raised by the services"""


class ValidationError(WorkbenchError, ValueError):
    """Malformed input: wrong dimension, non-finite values, bad JSON payload"""


class ConstructionError(WorkbenchError, ValueError):
    """A polytope (or other object) could not be built from valid-looking data"""


class PreconditionError(WorkbenchError, ValueError):
    """An operation was called outside its domain"""


class ConvexityError(WorkbenchError, ValueError):
    """A symplectic potential lost strict convexity"""


class SolverError(WorkbenchError, RuntimeError):
    """An iterative solver did not converge"""

    def __init__(self, message: str, diagnostics: Optional[Dict] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
