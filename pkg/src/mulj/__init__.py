"""Proof kernel and rewriting toolkit for sequent calculi with least and
greatest fixed points, their circular variants and a lambda-calculus oracle."""

__version__ = "0.1.0"
