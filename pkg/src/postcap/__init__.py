"""Capacity toolkit for POST channels: feedback program, simulation plans, realizability."""

from .channels import (
    ChannelSpecError,
    MemorylessChannel,
    PostChannel,
    ProximityReport,
    SingularKernelError,
    build_example,
    load_channel_spec,
    load_post_channel,
    max_admissible_eps,
    proximity,
    save_channel_spec,
)
from .feedback import (
    FeedbackResult,
    JointInputState,
    feasible_init,
    solve_fcap,
    support_restriction,
    uniqueness_probe,
)
from .memoryless import (
    CapacityProfile,
    SurjectivityReport,
    capacity_iteration,
    check_connected,
    check_indecomposable_sufficient,
    delta_thresholds,
    scrambling_coefficient,
    surjectivity_check,
)
from .realize import (
    RealizabilityVerdict,
    d_metric,
    lp_feasibility,
    lstsq_projection,
    sweep_example,
    realizability_check,
    write_sweep_csv,
)
from .simulate import (
    KappaReport,
    MarkovOutputLaw,
    SimPlan,
    SizeCapError,
    build_plan,
    deviation_check,
    kappa_bound,
    markov_output_vector,
    nfold_matrix,
    plan_mutual_information,
    verify_plan,
)

__version__ = "0.1.0"
