"""Random conformal perturbations of reference metrics.

Gaussian random conformal factors on model geometries, the resulting
transformed curvatures, Monte Carlo estimates of curvature sign-change and
sup-norm deviation probabilities, and the closed-form bounds and asymptotics
they are checked against.
"""

__version__ = "0.1.0"
