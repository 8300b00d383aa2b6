"""frobflat: numerical flattening charts for elliptic structures on balls in R^r x C^n.

Subpackages
-----------
series     truncated multivariate power-series algebra (the substrate)
funcspaces Zygmund / Hoelder / analytic-coefficient norm estimators
frames     vector fields, frames, structure checks, normalization, reduction
flows      Lie-series flows, the composed flow map, first integrals
elliptic   the overdetermined operator E, its spectral inverse, contraction solvers
pipeline   the flattening pipeline and verification suite
cli        command-line driver (flatten / verify / norms / bench)
"""

from . import series, funcspaces, frames, flows, elliptic, pipeline

__version__ = "0.1.0"

__all__ = ["series", "funcspaces", "frames", "flows", "elliptic", "pipeline"]
