"""Verification toolchain for SystemC-style component models.

Component models are written in SCL, a small SystemC-like modelling
language.  The package parses and elaborates SCL, explores the resulting
scheduler state space, checks invariants and LTL properties, learns
interface stubs for compositional checks, emits Promela for SPIN and
generates model-based test cases.
"""

__version__ = "0.1.0"
TOOLCHAIN = f"scver {__version__}"
