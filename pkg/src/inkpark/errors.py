"""Exception hierarchy. Everything raised on purpose derives from InkparkError."""


class InkparkError(Exception):
    """Base class for all validation and processing errors."""


class TrialParseError(InkparkError):
    """Raised when a trial file violates the on-disk contract.

    Carries enough context to point at the offending line and field.
    """

    def __init__(self, message, path=None, line=None, field=None):
        self.path = path
        self.line = line
        self.field = field
        loc = []
        if path is not None:
            loc.append(str(path))
        if line is not None:
            loc.append(f"line {line}")
        if field is not None:
            loc.append(f"field '{field}'")
        prefix = ": ".join(loc)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class TrialValidationError(InkparkError):
    """An in-memory Trial violates an invariant."""


class ManifestError(InkparkError):
    """A cohort manifest is malformed or inconsistent."""


class PhaseTooShortError(InkparkError):
    """A trial phase cannot host the requested derivative order."""


class SeriesTooShortError(InkparkError):
    """A series operation received fewer samples than it needs."""


class SingleClassError(InkparkError):
    """A training partition contains only one class."""


class ConvergenceError(InkparkError):
    """The dual solver exhausted its working-set iteration budget."""


class DimensionMismatchError(InkparkError):
    """Vector/matrix dimensions do not line up."""
