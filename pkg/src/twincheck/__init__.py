"""Exhaustive verification toolkit for Coxeter systems, small incidence geometries and twin buildings."""
