"""Numerical toolkit for the trace criterion of analytic hypoellipticity.

Operators of the form -h^2 Delta + Q(x,h)^2 + (P(x,h) - z)^2 with
polynomial P, Q; see the README for the module map.
"""

__version__ = "0.1.0"
