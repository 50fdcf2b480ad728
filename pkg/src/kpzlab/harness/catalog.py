"""Importing this module fills the experiment registry."""

from . import exp_analytic, exp_jump, exp_lpp, exp_paths  # noqa: F401

ORDER = ("meander-densities", "meander-bounds", "nz-tails", "nt-arcsine", "numnt-tail", "bridge-sup",
         "arcsine-argmax", "lpp-gue", "gibbs-invariance", "jump-structure", "jump-pass-rate",
         "jump-density-monitor", "costs-tables", "corner-oracle", "pole-oracle", "polymer-ordering",
         "quilt-continuity", "increment-moment", "analytic-lemmas")
