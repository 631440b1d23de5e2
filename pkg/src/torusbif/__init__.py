"""Numerical reconstruction of the bifurcation diagram of a monotone family of torus flows.

The family is ``x' = Omega_x - cos 2pi(y - phi) - eps cos 2pi x``,
``y' = Omega_y - sin 2pi y - eps sin 2pi x``.
"""

__version__ = "0.1.0"

from .family import ParamPoint, StatePoint, SystemConfig, eval_field  # noqa: E402

__all__ = ["ParamPoint", "StatePoint", "SystemConfig", "eval_field", "__version__"]
