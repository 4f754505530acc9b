"""
Error hierarchy for the synthesis library.

Library code raises these; the objective turns mechanism errors into a
penalty value and the CLI maps them to exit codes.
"""


class SynthesisError(Exception):
    """Base class for every error raised by this project"""


class ValidationError(SynthesisError):
    """Malformed problem, design or result input"""


class GeometryError(SynthesisError):
    """Base class for unit-sphere geometry failures"""


class DegenerateVector(GeometryError):
    """A vector too short to be normalized onto the unit sphere"""


class DegenerateGeodesic(GeometryError):
    """Endpoints are parallel or antiparallel, so the arc axis is undefined"""


class MechanismError(SynthesisError):
    """Base class for spherical four-bar kinematic failures"""


class DegenerateMechanism(MechanismError):
    """Two adjacent joints coincide or are antipodal"""


class InfeasibleConfiguration(MechanismError):
    """The linkage cannot be assembled at the requested input angle"""


class SingularConfiguration(MechanismError):
    """The half-angle closure solution divides by C - B = 0"""


class DegenerateCoupler(MechanismError):
    """Coupler joints r2 and r3 are parallel, so the coupler plane is undefined"""


class NoValidBranch(MechanismError):
    """Neither branch of the closure solution reproduces the assembly position"""


class NoConvergence(MechanismError):
    """The numeric closure solver found no bracket or ran out of iterations"""
