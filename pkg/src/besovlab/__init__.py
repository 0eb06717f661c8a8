"""Transfer operators of expanding circle maps on Besov spaces.

Modules
-------
dyadic        Littlewood-Paley blocks, Besov and L^p norms on the circle.
dynamics      Circle maps, weights, cocycles, periodic orbits, pressure.
transfer      The weighted transfer operator, Galerkin matrices, stable eigenvalues.
lasota_yorke  Block split of the operator, Lasota-Yorke check, radius bound.
kernels       Oscillatory kernels of the off-diagonal blocks and their decay.
estimators    scikit-learn style wrappers.
cli           Command-line front end.
"""
from .dyadic import (BesovParams, CircleAtlas, DyadicFilter, GridFunction, besov_norm,
                     besov_norm_charted, build_filter, lp_block, lp_norm, psi, rho)
from .dynamics import (CircleMap, OrbitSet, Weight, chi_min, cocycle, gl_bound,
                       inverse_branches, periodic_points, pressure, r_limit, r_n)
from .transfer import (FourierMatrix, TransferOp, apply, assemble_matrix, duality_residual,
                       eigenvalues, stable_eigenvalues)
from .lasota_yorke import (LYConstants, LYReport, block_operator_norms, compute_constants,
                           essential_radius_probe, hook, thm_bound, verify_ly)
from .kernels import (KernelGrid, LocalBranch, LocalWeight, b_m_eval, decay_check,
                      inv_filter_kernel, kernel_eval, young_chain_check)
from .estimators import LittlewoodPaleyTransformer, SpectralProbe, TransferOperatorTransformer

__version__ = "0.1.0"
