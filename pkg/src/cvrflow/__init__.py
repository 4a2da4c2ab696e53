"""Decision-focused conservation voltage reduction toolkit.

Three-stage Volt-Var control over a radial feeder (day-ahead MISOCP,
intra-day SOCP, real-time droop power flow) plus a bi-level trainer that
learns linear multi-timescale PV forecast models against downstream
operational cost.
"""

__version__ = "0.1.0"
