"""Ground states of the doubly critical coupled Schrodinger system with Hardy potentials."""
__version__ = "0.1.0"
