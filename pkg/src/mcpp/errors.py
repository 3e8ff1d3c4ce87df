"""Exception hierarchy shared by the planner stages."""


class PlannerError(Exception):
    """Base class for every error raised by the planner."""


class InputDomainError(PlannerError, ValueError):
    """An argument is outside the domain an operation accepts."""


class InfeasibleDiscretizationError(PlannerError):
    """No placement of the node lattice leaves any free node inside the ROI."""


class InfeasiblePartitionError(PlannerError):
    """The free space cannot be divided into one connected region per UAV."""


class FleetConfigurationError(PlannerError):
    """UAV positions, shares and fleet size do not agree with each other."""
