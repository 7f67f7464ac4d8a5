"""
Exceptions raised across the package, plus the dimension check used at module
boundaries.
"""
from typing import Any


class FedCyError(Exception):
    """
    Base class for every error raised on purpose by this package. The command line
    entry point catches it, logs the message and exits with status 1.
    """
    def __init__(self, message: str) -> None:
        super().__init__(message)
        self.message = message

    def __str__(self) -> str:
        return self.message


class ConfigurationError(FedCyError):
    """
    The experiment configuration (or a constructor argument) is invalid.
    """


class ShapeError(FedCyError):
    pass


class UnboundLeafError(FedCyError):
    pass


class NonFiniteError(FedCyError):
    pass


class GradientError(FedCyError):
    pass


class SamplingError(FedCyError):
    pass


class WorkflowError(FedCyError):
    pass


class MetricError(FedCyError):
    pass


class FederationError(FedCyError):
    pass


class DatasetError(FedCyError):
    """
    A dataset, checkpoint or run directory file is missing or incomplete.
    """


def check_dimensions_match(dimension_1: Any,
                           dimension_2: Any,
                           dim_1_name: str,
                           dim_2_name: str) -> None:
    if dimension_1 != dimension_2:
        raise ShapeError(f"{dim_1_name} must match {dim_2_name}, but got {dimension_1} "
                         f"and {dimension_2} instead")
