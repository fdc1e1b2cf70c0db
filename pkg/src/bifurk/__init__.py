"""Bifurcating Markov chains on the binary tree and asymmetric BAR(1) inference."""

from .bar import (
    BarKernel,
    BarParams,
    Stationary,
    StationaryMoments,
    sample_stationary,
    simulate_bar,
    stationary_moments,
)
from .empirics import (
    Generation,
    PermutedPrefix,
    Subtree,
    decompose_prefix_average,
    decompose_subtree_average,
    node_average,
    triangle_average,
)
from .errors import BifurkError
from .experiments import ExperimentPlan, ExperimentReport, run
from .hypotest import (
    TestReport,
    chi2_survival,
    normal_survival,
    run_test,
    test_equal_alpha,
    test_equal_beta,
    test_equal_dynamics,
    test_equal_fixed_point,
    test_sister_difference,
)
from .inference import FitResult, asymptotic_covariance, fit, fixed_point_gap_ci
from .io import read_lineage, write_lineage, write_report
from .kernel import (
    Categorical,
    Dirac,
    FiniteKernel,
    Gaussian,
    exact_gen_second_moment,
    simulate_tmc,
)
from .lineage import Lineage
from .treekit import GenerationPermutation, sample_permutation

__version__ = "0.1.0"
