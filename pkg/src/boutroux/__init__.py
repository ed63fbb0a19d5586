"""Numerical laboratory for tronquee solutions of Painleve I.

Subpackages cover exact formal series (:mod:`boutroux.series`), Borel
summation (:mod:`boutroux.borel`), complex-path ODE integration
(:mod:`boutroux.odes`), constant-beyond-all-orders extraction
(:mod:`boutroux.connection`), two-scale pole-sector expansions
(:mod:`boutroux.twoscale`) and cycle-average dynamics
(:mod:`boutroux.cycles`).
"""

__version__ = "0.1.0"
