"""lanepilot: a desk-scale autonomous-driving stack.

A pixels-to-steering CNN trained by behavioral cloning, a deterministic 2D
driving simulator with three-zone distance sensing, an obstacle-avoidance
state machine, a closed-loop autonomy evaluator, and an operator service.
"""

__version__ = "0.1.0"
