"""Rectangle partition functions for critical systems.

Two independent routes to the same quantities: closed-form conformal
amplitudes (modular/elliptic functions, Verma-module contractions,
hypergeometric blocks) and microscopic lattice computations (Temperley-Lieb
loop chains, the free-fermion Ising chain, grid Laplacians).  The test suite
cross-validates the routes against each other.
"""

__version__ = "0.1.0"
