"""graphcalc: exact combinatorial engine for the graph calculus of
operad-like structures — graphs, morphisms and their factorization,
instance predicates, free constructions, bar/cobar/Feynman transforms,
the edge-graded bialgebra, universal operations and master equations,
all over exact rational arithmetic.
"""

__version__ = "0.1.0"
