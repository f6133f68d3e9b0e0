"""levylab: a Monte Carlo laboratory for the functional Ito calculus of
Levy processes.

Core subpackages: paths (cadlag step paths and operators), functional
(Dupire derivatives and the functional catalog), levy (triplets, spectral
data, simulation), localtime (integrals against Brownian local time),
operators (the antiderivative/jump-smoothing pair), ito (formula verifiers).
The FastAPI app lives in levylab.service; the CLI in levylab.cli.
"""

__version__ = "0.1.0"
