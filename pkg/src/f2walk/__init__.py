"""Exact and Monte Carlo tooling for spherical averages on free-group systems.

The package is organised bottom-up:

* ``words``     -- reduced words over two generators, spheres, walk steps
* ``prng``      -- counter-based deterministic randomness
* ``finite``    -- exact checks on finite permutation systems
* ``ball``      -- the boundary/ball measure system with lazy infinite words
* ``cylinders`` -- exact cylinder-set densities and the Markov push
* ``tower``     -- glued two-copy extensions and delayed density chains
* ``estimator`` -- walk-based estimates of averages and maximal functions
* ``experiments`` / ``service`` / ``cli`` -- pipelines and their interfaces
"""

__version__ = "0.1.0"
