"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid parameters or inconsistent geometry, detected before any run."""


class PreconditionError(RuntimeError):
    """An operation was called on a state that does not satisfy its precondition."""


class NormalizationError(ConfigError):
    """A dispersal kernel does not carry total mass 1."""

    def __init__(self, mass: float):
        self.mass = mass
        self.deficit = 1.0 - mass
        super().__init__(f"kernel mass is {mass!r} (deficit {self.deficit:+.3e})")


class AbsorbingState(RuntimeError):
    """The total event rate is zero: nothing can happen any more."""


class BracketError(RuntimeError):
    """A bisection bracket does not straddle the transition."""
