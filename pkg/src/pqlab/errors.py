"""Exception types raised by the numerical routines."""


class ConvergenceError(RuntimeError):
    """An iterative solver exhausted its budget without meeting its tolerance."""


class DegenerateFiberError(ValueError):
    """Fibering closed forms refused: |P|, |Q| or |F| below the degeneracy guard."""
