"""Closed-form values for the canonical test markets."""

import math

# Exponential utility, trinomial market, B = 0, x = 0
TRINOMIAL_EXP_THETA = (2.0 / 3.0) * math.log(2.0)
TRINOMIAL_EXP_Y = (2.0 ** (1.0 / 3.0), 1.0, 2.0 ** (-2.0 / 3.0))
TRINOMIAL_EXP_VALUE = -sum(TRINOMIAL_EXP_Y) / 3.0

# Quadratic shortfall, trinomial market, B = (0, 0, 1), x = 0.2
TRINOMIAL_QS_CAPITAL = 0.2
TRINOMIAL_QS_VALUE = -4.0 / 375.0
TRINOMIAL_QS_THETA = 0.72
TRINOMIAL_QS_WEALTH = (-0.16, 0.2, 0.92)
TRINOMIAL_QS_DUAL = (0.32, 0.0, 0.16)
