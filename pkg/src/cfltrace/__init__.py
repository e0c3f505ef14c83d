"""Petri-net reachability along finite-index context-free traces."""

from .core import Multiset, NotSubsumed, SearchBudget, Verdict, msum, mdiff, mleq, project

__version__ = "0.1.0"

__all__ = [
    "Multiset",
    "NotSubsumed",
    "SearchBudget",
    "Verdict",
    "msum",
    "mdiff",
    "mleq",
    "project",
]
