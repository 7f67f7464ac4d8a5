from fedcy.common.checks import (ConfigurationError, DatasetError, FederationError, FedCyError,
                                 GradientError, MetricError, NonFiniteError, SamplingError,
                                 ShapeError, UnboundLeafError, WorkflowError,
                                 check_dimensions_match)
from fedcy.common.util import FORMAT_VERSION, derive_rng
