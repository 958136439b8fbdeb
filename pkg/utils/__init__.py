"""Subshift-to-tiling compiler: local rules, solvers, hierarchy and oracles."""
