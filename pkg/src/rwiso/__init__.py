"""rwiso: random-walk profiles, curvature and coupling partitions on finite graphs."""

__version__ = "0.1.0"

from . import coupling, curvature, errors, experiments, graphs, green, tails, transport, walks  # noqa: F401
