"""Branched rough paths, their rough integrals against polynomial one-forms,
and the first-level correspondence with inhomogeneous geometric paths."""

from .character_group import Character, basis, evaluate, group_product, inverse, is_character, norm
from .effect_integrator import (
    EffectPath,
    NonConvergenceError,
    OneFormRep,
    effect_path,
    full_integral,
    graft_effects,
    integral_path,
    integrate_one_form,
    local_error_report,
    multiply_effects,
    translate,
    y_tilde,
)
from .forest_algebra import (
    EMPTY,
    ForestLinComb,
    LabelledForest,
    LabelledTree,
    canonicalize,
    coproduct,
    encode,
    enumerate_forests,
    enumerate_trees,
    gl_product,
    graft_onto,
    graft_root,
    parse,
    symmetry_factor,
)
from .one_form import Polynomial, PolynomialOneForm, beta_eval, lip_norm_estimate
from .pi_correspondence import (
    GeneratorSet,
    PiRoughPath,
    build_companion_pi_path,
    compare_first_levels,
    compute_generators,
    first_level_pi_integral,
    word_degree,
)
from .rough_path import BranchedRoughPath, ControlFn, canonical_lift, dp_metric, ito_like_lift, p_variation

__all__ = [name for name in dir() if not name.startswith("_")]
