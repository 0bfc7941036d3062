"""Minimum-variance portfolios with non-identical asset variances: exact and
iterative solvers, replica predictions, and Monte Carlo ensemble checks."""

from .analytic import Prediction, predict
from .core import Portfolio, ReturnMatrix, SolveReport, SolverId, budget_residual, concentration, covariance_matrix, risk_per_asset
from .market import ReturnDistribution, generate, rescale
from .solvers import BPParams, SteepestDescentParams, solve
from .variance_model import PRESETS, Explicit, Identical, InverseMoments, TwoPoint, Uniform, analytic_moments, preset, sample_variances

__version__ = "0.1.0"
