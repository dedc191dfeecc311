"""Level curves of quasiperiodic functions restricted to 2-planes in the
m-torus: tracing, strip classification, integral-hyperplane labels and
stability-zone scans."""

from .classifier import ClassifierConfig, Kind, StripLabel, SurveyParams, classify, survey_level
from .lattice import LinearForm, PlaneSpec, build_plane, primitive_normalize
from .qpfunction import TrigPolynomial, find_critical_points, restrict
from .tracer import TraceParams, Termination, Trajectory, trace

__version__ = "0.1.0"
