"""Multiple positive solutions of -u'' = lam*u + a(x)*u^p with an indefinite weight."""
from .boxes import ClassifierConfig, classify, r_lambda
from .continuation import Branch, continue_branch, detect_turning_point, init_branch
from .errors import (BandHit, IntegrationFault, MagnitudeFault, MarginViolation, MultibumpError,
                     SpecError, SuiteFailure, Unresolved)
from .greens import (BumpWeight, Eigenpair, Grid, GridProfile, apply_homotopy, apply_K, apply_Phi,
                     build_bump_weight, kernel)
from .indexset import IndexSet, all_index_sets
from .newton import NewtonConfig, fd_jacobian, fd_residual, seed_profile, solve_all
from .shooting import (LiouvilleProblem, ShootingField, box_degree, enumerate_solutions,
                       integrate_ivp, liouville_check)
from .solutions import SolutionSet, match_profiles
from .verify import (VerificationReport, degree_table, mu_star, verify_lemma22, verify_lemma23,
                     verify_lemma24, verify_lemma25)
from .weight import SignPattern, Weight, WeightSpec, build_weight, eval_weight, sin_weight

__version__ = "0.1.0"
