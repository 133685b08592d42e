"""Exact, training-free neural compilation of piecewise-affine functions.

Continuous PWA functions on polytopic partitions (explicit MPC laws in
particular) are rewritten as networks whose weights come straight from the
function data: a selector stack locates the containing region, gated
evaluation layers apply the matching affine map. A naive sequential
evaluator serves as the equivalence oracle, and structured inference makes
the compiled form faster than the sequential scan.
"""
from .bench import BenchReport, OutputMismatchError, run_bench
from .bigm import (BigMBound, DomainError, InfeasibleDomainError,
                   UnboundedDomainError, compute_big_m_exact,
                   compute_big_m_interval)
from .compiler import (Activation, AuditError, LayerSpec, Network,
                       assemble_checker, assemble_yann, assemble_yann_l,
                       audit_network, build_constraint_layers,
                       build_first_hit_layer, build_gated_affine_layers,
                       build_single_signed_affine, load_network,
                       save_network)
from .inference import (ForwardTrace, Precision, forward_batch,
                        forward_dense, forward_structured, forward_trace)
from .lp import (LpProblem, LpResult, LpStatus, chebyshev_center, is_empty,
                 solve_lp)
from .mpc import (LtiSystem, Trajectory, load_system, lti_step, save_system,
                  simulate, trajectory_to_csv)
from .pwa import (EvalResult, Halfspace, OutsideDomainError, PwaFunction,
                  Region, box_halfspaces, contains, evaluate_naive, load_pwa,
                  save_pwa)
from .synth import (generate_max_affine, generate_vector_pwa,
                    max_affine_from_pieces, max_affine_value)

__version__ = "0.1.0"
