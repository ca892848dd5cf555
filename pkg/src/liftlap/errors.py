"""Exception types shared across the library."""


class MeshError(ValueError):
    """Malformed mesh input: parse failure, bad index, or non-manifold topology."""


class DegenerateFace(ValueError):
    """A zero-area triangle was hit where a face normal is required."""


class DegenerateConfiguration(ValueError):
    """No usable weight vector exists for the given stencil points."""


class ZeroDenominator(DegenerateConfiguration):
    """The stencil weights produce a vanishing second-moment denominator."""
