"""Symbolic-numeric toolkit for h-almost Ricci solitons.

Subpackages build exact coordinate expressions (`expr`), curvature operators
over charts (`geometry`), model spaces and warped products (`spaces`), soliton
structures and residual checks (`soliton`), the worked example catalog
(`catalog`), randomized identity suites (`identities`), and the manifest/CLI
layer (`manifest`, `cli`).

Sign convention used throughout: an h-almost Ricci soliton satisfies
Ric + (h/2) L_X g = lambda g, and it is called expanding when lambda < 0,
steady when lambda = 0, shrinking when lambda > 0.
"""

__version__ = "0.1.0"
