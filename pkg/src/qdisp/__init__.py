"""Pseudospectral simulator and asymptotics harness for the fifth-order
mKdV-type equation u_t - (1/5) u_xxxxx = d/dx ( alpha (2 u^2 u_xx
+ 3 u u_x^2) + beta u^5 ).
"""

__version__ = "0.1.0"
