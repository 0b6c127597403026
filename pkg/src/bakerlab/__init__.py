"""bakerlab: numerical laboratory for the dissipative quantum baker map.

Classical strange-attractor sampling and box-counting dimension, the
quantized baker map with contractive momentum noise (Kraus form), full
and iterative resonance spectra with fractal Weyl scaling fits, and
Husimi phase-space representations of the spectral modes.
"""

__version__ = "0.1.0"

from .classical import (
    AttractorSample,
    BoxCountingEstimate,
    PhasePoint,
    attractor_dimension,
    baker_step,
    box_counting_dimension,
    iterate_to_attractor,
)
from .quantum import (
    KrausSet,
    MaterializationGuard,
    Superoperator,
    apply_channel,
    apply_channel_adjoint,
    apply_noise,
    apply_noise_adjoint,
    build_antiperiodic_dft,
    build_baker_unitary,
    build_kraus,
    build_superoperator,
    effective_hbar,
    superop_matvec,
    unvec,
    vec,
)
from .spectral import (
    DensityHistogram,
    EigenPair,
    ResonanceSpectrum,
    WeylComparison,
    WeylScalingFit,
    count_long_lived,
    decay_rate,
    decay_rates,
    density_of_states,
    full_spectrum,
    leading_eigenpairs,
    weyl_law_comparison,
    weyl_scaling_fit,
)
from .phasespace import (
    HusimiGrid,
    TorusCoherentState,
    coherent_state,
    husimi_of_operator,
    husimi_of_state,
    long_lived_projector_density,
    overlap_with_invariant,
)

__all__ = [
    "__version__",
    # classical
    "AttractorSample",
    "BoxCountingEstimate",
    "PhasePoint",
    "attractor_dimension",
    "baker_step",
    "box_counting_dimension",
    "iterate_to_attractor",
    # quantum
    "KrausSet",
    "MaterializationGuard",
    "Superoperator",
    "apply_channel",
    "apply_channel_adjoint",
    "apply_noise",
    "apply_noise_adjoint",
    "build_antiperiodic_dft",
    "build_baker_unitary",
    "build_kraus",
    "build_superoperator",
    "effective_hbar",
    "superop_matvec",
    "vec",
    "unvec",
    # spectral
    "DensityHistogram",
    "EigenPair",
    "ResonanceSpectrum",
    "WeylComparison",
    "WeylScalingFit",
    "count_long_lived",
    "decay_rate",
    "decay_rates",
    "density_of_states",
    "full_spectrum",
    "leading_eigenpairs",
    "weyl_law_comparison",
    "weyl_scaling_fit",
    # phasespace
    "HusimiGrid",
    "TorusCoherentState",
    "coherent_state",
    "husimi_of_operator",
    "husimi_of_state",
    "long_lived_projector_density",
    "overlap_with_invariant",
]
