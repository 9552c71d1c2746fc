from .field import FeatureField, gen_feature_field
from .render import (
    DomainParams,
    fiber_mask,
    hidden_mask,
    nucleus_centers,
    render_domain_a,
    render_domain_b,
    true_density_b,
    validate_params,
)
from .dataset import (
    SynthSlidePair,
    child_seed,
    make_eval_set,
    make_training_set,
    read_pair_sidecar,
    write_pair_sidecar,
)

__all__ = [
    "FeatureField",
    "gen_feature_field",
    "DomainParams",
    "validate_params",
    "render_domain_a",
    "render_domain_b",
    "fiber_mask",
    "hidden_mask",
    "true_density_b",
    "nucleus_centers",
    "SynthSlidePair",
    "child_seed",
    "make_training_set",
    "make_eval_set",
    "write_pair_sidecar",
    "read_pair_sidecar",
]
