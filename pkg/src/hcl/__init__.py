"""hcl: a numerical laboratory for complex Hessian-type fully nonlinear
elliptic equations f(lambda[chi + i ddbar u]) = psi.

Modules:
    symfunc  - symmetric function families on Garding cones
    spectra  - Hermitian eigenvalue machinery and bordered-matrix localization
    subsol   - subsolution verification and the epsilon-dichotomy machinery
    grid     - discrete flat geometries and complex finite-difference operators
    solve    - Newton/continuation solvers and a priori estimate reports
    cli      - command-line front end
"""

from . import errors, grid, solve, spectra, subsol, symfunc
from .symfunc import FuncFamily

__version__ = "0.1.0"

__all__ = ["errors", "symfunc", "spectra", "subsol", "grid", "solve", "FuncFamily"]
