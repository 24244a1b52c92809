"""noiselab: spectral noise-sensitivity toolkit for walks on Schreier graphs.

Core layout:

* ``noiselab.graphs``    -- state spaces, generator sets, family builders
* ``noiselab.spectral``  -- eigendecomposition, semigroup, log-Sobolev
* ``noiselab.boolfn``    -- Boolean functions, influences, Fourier weights
* ``noiselab.noise``     -- exact covariance and the correlation bound
* ``noiselab.exclusion`` -- transposition walk, layered slices
* ``noiselab.simulate``  -- seeded Monte Carlo cross-checks
* ``noiselab.service``   -- FastAPI wrapper; ``noiselab.cli`` is its client
"""

__version__ = "0.1.0"
