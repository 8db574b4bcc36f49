"""Array programs to array-free Horn clauses via distinguished-cell abstractions."""

__version__ = "0.1.0"
