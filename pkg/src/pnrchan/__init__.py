"""BPSK coherent-state channel with a photon-number-resolving hybrid receiver.

Analytic conditional statistics for the three readout strategies (raw count
pair, count difference, difference sign), their mutual informations, the
ideal-homodyne reference, wiretap-channel key figures under individual and
collective attacks, and a reproducible Monte Carlo shot simulator with
experimental-record ingestion.
"""

__version__ = "0.1.0"

from .channel import (
    ChannelParams,
    DetectionRates,
    coherent_overlap,
    detection_rates,
    eve_params,
    loss_db_to_transmissivity,
    transmissivity_to_loss_db,
)
from .errors import CalibrationError, NumericsError, PnrchanError, ValidationError
from .information import (
    MiReport,
    binary_entropy,
    mi_bds,
    mi_hl,
    mi_homodyne,
    mi_report,
    mi_wf,
    mutual_information,
    shannon_entropy,
    wf_hl_equivalence_check,
)
from .montecarlo import (
    CalibrationResult,
    ExperimentRun,
    ShotRecord,
    calibrate_from_means,
    calibrate_params,
    empirical_distributions,
    plugin_mi,
    run_experiment,
    sample_shot,
)
from .receivers import (
    BdsDistribution,
    GaussianDensity,
    HlDistribution,
    WfDistribution,
    bds_probs,
    homodyne_pdf,
    poisson_logpmf,
    poisson_pmf,
    skellam_pmf,
    skellam_pmf_grid,
    wf_pmf,
)
from .security import (
    RankTwoState,
    SecurityReport,
    WiretapScenario,
    fock_entropy_oracle,
    holevo_chi_bds,
    holevo_chi_wf,
    joint_abe_pmf,
    kgr_ca,
    kgr_ia_dr,
    kgr_ia_rr,
    mi_bob_eve,
    normalized_k,
    rank2_entropy,
    security_report,
    security_report_for,
)
