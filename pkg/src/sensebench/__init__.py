"""Shot-budgeted noisy quantum phase estimation: GHZ response simulation,
zero-noise extrapolation, response inference, protocol Monte Carlo and
analytic error bounds."""

from .bounds import (
    BoundInputs,
    BoundTerms,
    bound_inference,
    bound_naive,
    bound_noise_aware,
    bound_terms,
    bound_zne,
    bound_zne_inference,
    hl,
    precision_global_depol,
    sql,
)
from .inference import (
    InferenceDataset,
    InferredResponse,
    fit_trig_polynomial,
    infer_response,
    inference_error_bound,
    inference_nodes,
    logfactor,
    shots_per_node_hoeffding_general,
    shots_per_node_mitigated,
    shots_per_node_plain,
)
from .noise import (
    LindbladSpec,
    NoiseSpec,
    PauliChannel,
    analytic_response,
    build_ghz_channel,
    lindblad_to_pauli_channel,
    load_lindblad_toml,
    make_source,
    simulate_response,
    symplectic_product,
)
from .protocols import (
    ErrorSummary,
    PhasePrior,
    ProtocolSpec,
    SensingSystem,
    TrialResult,
    choose_bias,
    compare_protocols,
    conditional_decomposition,
    estimate_alpha,
    monte_carlo_bmse,
    run_trial,
    sample_target_phase,
)
from .response import (
    InvertibleBranch,
    ResponseSource,
    ShotEstimate,
    TrigPolynomial,
    derivative_trig,
    eval_trig,
    find_branch,
    invert_on_branch,
    max_gradient_point,
    response_variance,
    sample_response,
)
from .zne import (
    ShotAllocation,
    ZneConfig,
    allocate_shots,
    hyperparameter_objective,
    lagrange_weights_at_zero,
    mitigated_estimate,
    tilted_chebyshev_nodes,
    zne_measure,
)

__version__ = "0.1.0"
