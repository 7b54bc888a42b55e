"""paroa: outer-approximation solver and warm-start benchmarks for
sequences of parametrized convex mixed-integer NLPs."""

__version__ = "0.1.0"
