"""Rate regions for distributed function computation and rate distortion
with a cooperating transmitter, built on conditional characteristic graphs."""

__version__ = "0.1.0"

from .prob import (  # noqa: F401
    Alphabet,
    Channel,
    FunctionSpec,
    JointPmf,
    ProbabilityError,
    RateTuple,
    check_markov_chain,
    compose_joint,
    conditional_entropy,
    entropy,
    information_measure,
    mutual_information,
)
from .graphs import (  # noqa: F401
    CharGraph,
    GraphError,
    IndependentSetCapError,
    IndependentSetFamily,
    SupportSetVariable,
    build_conditional_char_graph,
    enumerate_maximal_independent_sets,
    support_set_transform,
    verify_membership_condition,
)
from .gentropy import (  # noqa: F401
    GraphEntropyResult,
    SolverConfig,
    conditional_graph_entropy,
    grid_oracle_value,
)
from .regions import (  # noqa: F401
    AuxiliarySystem,
    DistortionBudgetError,
    FrontierCurve,
    InfeasibleBudgetError,
    RdConstraint,
    RegionError,
    SearchConfig,
    SumRateResult,
    evaluate_inner_bound,
    evaluate_rd_bounds,
    inner_bound_rates,
    kaspi_berger51_search,
    minimize_sum_rate,
    rate_one_round,
    region_cascade,
    region_full_cooperation,
    region_partially_invertible,
    region_two_round,
    validate_auxiliaries,
)
from .typicality import (  # noqa: F401
    CodebookCapError,
    TypicalityConfig,
    is_jointly_typical,
    typicality_empirics,
)
from .binning import (  # noqa: F401
    BinningCodebook,
    SchemeCounts,
    simulate_two_phase,
)
