"""Exception hierarchy.

Every error raised for bad input derives from :class:`QuantumInputError`, a
``ValueError`` subclass, so callers (the CLI in particular) can catch one type.
"""


class QuantumInputError(ValueError):
    """Base class for invalid states, operators and protocol inputs."""


class DimensionMismatch(QuantumInputError):
    pass


class NotHermitian(QuantumInputError):
    pass


class NotUnitTrace(QuantumInputError):
    pass


class NotPositive(QuantumInputError):
    pass


class NotUnitary(QuantumInputError):
    pass


class NotUnitVector(QuantumInputError):
    pass


class DegenerateSpectrum(QuantumInputError):
    pass


class EmptyGroup(QuantumInputError):
    pass


class IncompleteKraus(QuantumInputError):
    pass


class NonIncoherentEnvironment(QuantumInputError):
    pass


class TooFewFlagStates(QuantumInputError):
    pass


class ZeroSensitivityAncilla(QuantumInputError):
    """The control qubit has no z polarization, so the interferometer reads nothing."""


class ZeroPhase(QuantumInputError):
    pass


class AncillaNotBasisElement(QuantumInputError):
    pass


class IncompleteTable(QuantumInputError):
    pass


class InvalidProbability(QuantumInputError):
    pass


class RankOutOfRange(QuantumInputError):
    pass


class UnknownSuite(QuantumInputError):
    pass
