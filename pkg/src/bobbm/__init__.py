"""Galerkin-truncated Benjamin-Ono-BBM flow and its Gaussian-measure diagnostics."""

__version__ = "0.1.0"

from .spectral import FourierField, energy, l2_norm, sobolev_norm  # noqa: E402
from .gaussian import GaussianSpec  # noqa: E402
from .dynamics import FlowParams, flow, linear_propagator, vector_field  # noqa: E402
from .trilinear import FrequencyTriple, q_full, q_split  # noqa: E402
from .qi import ExponentSchedule, QiKernel, qi_second_moment_exact  # noqa: E402
