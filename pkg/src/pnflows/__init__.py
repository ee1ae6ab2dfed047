"""Normalizing flows with base distributions on unit p-norm spheres.

The library pairs a RealNVP/Glow-style invertible chain with three base
distributions: a standard Gaussian on R^d, a von Mises-Fisher on the unit
hypersphere (reached through a stereographic map), and a Dirichlet on the
simplex (reached through a stick-breaking map).  Fixed-norm bases admit
principled latent interpolation (slerp, simplex lerp) where Gaussian
lerp paths drift through low-density regions near the origin.
"""

from .bases import (BaseDistribution, DirichletBase, GaussianBase, Temperature,
                    VmfBase, log_density, sample, vmf_mean_resultant_length,
                    with_temperature)
from .checkpoint import load_checkpoint, save_checkpoint
from .config import ExperimentConfig, load_experiment_config, south_pole
from .datasets import (DatasetHandle, gaussian_mixture, load_csv, load_dataset,
                       load_idx, rings, two_moons)
from .errors import (ConfigError, DegeneratePathError, DomainError, FormatError,
                     NonFiniteError, PnflowsError, SimplexUnderflowWarning,
                     SingularityError, SupportError, UnsupportedTemperatureError)
from .evaluation import (FeatureExtractor, MetricReport, NormHistogram,
                         ProtocolResult, bpd_suite, fid, fid_from_stats,
                         interpolation_protocol, kid, norm_diagnostics)
from .flows import (ActNorm, AffineCoupling, CouplingNet, FlowModel, Permutation,
                    alternating_mask, build_flow_model)
from .interpolation import (DecodedPath, InterpolationPath, PathDiagnostics,
                            data_interpolate, default_rule, interpolation_path,
                            lerp, nclerp, path_diagnostics, simplex_lerp, slerp)
from .maps import (MapResult, check_simplex_point, check_sphere_point,
                   simplex_forward, simplex_inverse, sphere_forward, sphere_inverse)
from .special import (SpecialFnConfig, log_bessel_i, log_gamma, logit,
                      matrix_sqrt_psd, sigmoid)
from .training import (AdamState, EpochStats, GradientCheckReport, TrainConfig,
                       adam_step, clip_gradients, gradient, gradient_check,
                       train, warmup_factor)

__version__ = "0.1.0"
