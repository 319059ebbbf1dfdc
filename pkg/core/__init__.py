"""Numerical core: series, disc automorphisms, Hardy norms, operators and projections."""
