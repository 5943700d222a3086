"""Change-of-measure evolutionary optimization (greedy, coalescence and PSO-style innovations) with a benchmark harness."""

__version__ = "0.1.0"
