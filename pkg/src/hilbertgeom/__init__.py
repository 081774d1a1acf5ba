"""Hilbert geometry of convex bodies.

Gauges, Hilbert distances and Finsler norms, the modulus of convexity of a
based body, boundary convexity exponents, normalising frames and numerical
verification of power-law lower bounds on the modulus.
"""
from .body import (BasedBody, ConvexBody, RayHit, ball, based, boundary_intersect, contains, disk,
                   ellipse, ellipsoid, gauge, implicit, implicit_poly, p_ball, planar_section,
                   polygon, strict_convexity_probe, superellipse, tangent_hyperplane)
from .convexity import (BetaFit, BoundaryBetaFit, ModulusCurve, ModulusPoint, TheoremConstants,
                        VerificationReport, boundary_beta_convexity, conjugate_exponent,
                        dual_index, fit_beta, modulus_bruteforce, modulus_curve, modulus_refined,
                        norm_equivalence_constant, theorem_constants, verify_corollary,
                        verify_theorem)
from .errors import (HilbertGeomError, InvalidInputError, NonSmoothBoundaryError,
                     NotStrictlyConvexError, NumericalFailure, PreconditionError)
from .io import body_from_spec, dump_body, load_body
from .metrics import (chord_frame, directed_gauges, finsler_norm, hilbert_distance,
                      hilbert_midpoint, ohta_constant, symmetry_constant)
from .normalization import (AffineMap, apply_map, build_normalization, psi_angle,
                            shear_bound_scan)

__version__ = "0.1.0"

__all__ = [
    "AffineMap",
    "BasedBody",
    "BetaFit",
    "BoundaryBetaFit",
    "ConvexBody",
    "HilbertGeomError",
    "InvalidInputError",
    "ModulusCurve",
    "ModulusPoint",
    "NonSmoothBoundaryError",
    "NotStrictlyConvexError",
    "NumericalFailure",
    "PreconditionError",
    "RayHit",
    "TheoremConstants",
    "VerificationReport",
    "apply_map",
    "ball",
    "body_from_spec",
    "based",
    "boundary_beta_convexity",
    "boundary_intersect",
    "build_normalization",
    "chord_frame",
    "conjugate_exponent",
    "contains",
    "directed_gauges",
    "disk",
    "dump_body",
    "dual_index",
    "ellipse",
    "ellipsoid",
    "finsler_norm",
    "fit_beta",
    "gauge",
    "hilbert_distance",
    "hilbert_midpoint",
    "implicit",
    "implicit_poly",
    "load_body",
    "modulus_bruteforce",
    "modulus_curve",
    "modulus_refined",
    "norm_equivalence_constant",
    "ohta_constant",
    "p_ball",
    "planar_section",
    "polygon",
    "psi_angle",
    "shear_bound_scan",
    "strict_convexity_probe",
    "superellipse",
    "symmetry_constant",
    "tangent_hyperplane",
    "theorem_constants",
    "verify_corollary",
    "verify_theorem",
]
