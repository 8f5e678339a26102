"""Certified randomness from entangled states probed with nonorthogonal quantum inputs."""

from .adversary import (
    AttackStrategy,
    TrialRecord,
    Trials,
    attack_guessing_probability,
    estimate_and_certify,
    optimal_fake_fraction,
    simulate_attack,
    simulate_honest,
)
from .certification import (
    CertificateReport,
    chsh_randomness_curve,
    guessing_probability_bound,
    min_entropy,
    werner_randomness_curve,
)
from .optimizer import OptimizerConfig, maximize_guess, project_psd_trace_one, sdp_randomness_curve
from .protocol import (
    CorrelationTable,
    analytic_max_correlation,
    brute_force_max_correlation,
    build_povms,
    correlation,
    correlation_table,
    werner_closed_form,
)
from .states import DensityMatrix, InputEnsemble, bell_state, max_entangled, tetrahedral_ensemble, werner
from .witness import (
    Witness,
    WitnessDecomposition,
    bell_like_value_direct,
    bell_like_value_from_correlations,
    decompose_witness,
    werner_witness,
)

__version__ = "0.1.0"
