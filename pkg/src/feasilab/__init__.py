"""feasilab: projection and Douglas-Rachford splitting solvers for
Fourier-amplitude set feasibility, with a random-restart experiment harness.
"""

from .constraints import (
    AmplitudeConstraint,
    Constraint,
    ConstraintParams,
    FeasibilityProblem,
    LowFreqConstraint,
    SphereData,
    SparseRealConstraint,
    SupportConstraint,
    SymmetryConstraint,
)
from .driver import ChainResult, RunTrace, StopRule, random_start, run, warm_start_chain
from .fields import axis_reverse, dft3_forward, dft3_inverse, distance, norm
from .harness import (
    AlgoSpec,
    CampaignConfig,
    CampaignSummary,
    cluster_gaps,
    run_campaign,
    run_chain_campaign,
)
from .instances import (
    InstanceConfig,
    ProblemInstance,
    generate_instance,
    load_instance,
    save_instance,
)
from .metrics import GapBreakdown, gap, shadow, truth_error
from .operators import (
    CyclicProjections,
    CyclicRelaxedDR,
    ProductRelaxedDR,
    apply_cdrl,
    apply_cp,
    apply_drl_product,
    dr_pair,
    make_operator,
)

__version__ = "0.1.0"
