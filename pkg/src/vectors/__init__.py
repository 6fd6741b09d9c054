"""
Isotropic vectors: the y-side of the model
- Admissible vector models and their samplers
- Tensor products Y = y(1) x ... x y(k)
- Analytic and Monte Carlo moment profiles (a, b, sixth moments)
"""
from .vector_models import (
    VectorModel,
    MODEL_KINDS,
    COMPONENT_LAWS,
    sample_vector,
    sample_vectors,
    tensor_sample,
    tensor_samples,
    tensor_product_rows,
    component_moments,
)
from .moment_profiles import (
    MomentProfile,
    analytic_moment_profile,
    empirical_moment_profile,
    moment_profile_or_none,
    probe_matrices,
)

__all__ = [
    'VectorModel', 'MODEL_KINDS', 'COMPONENT_LAWS', 'sample_vector', 'sample_vectors',
    'tensor_sample', 'tensor_samples', 'tensor_product_rows', 'component_moments',
    'MomentProfile', 'analytic_moment_profile', 'empirical_moment_profile',
    'moment_profile_or_none', 'probe_matrices',
]
