"""Pairwise multipartite entanglement measures built from two-qudit probes."""
from .errors import (ConvergenceError, NotPSDError, NumericError, PairentError, ParseError,
                     UnsupportedError, UsageError)
from .qstate import (DensityMatrix, StateVector, density_of, named_state, partial_trace,
                     random_mixed, random_product, random_pure, tensor)
from .ketparse import parse_ket
from .probes import (ProbeKind, concurrence, mutual_information_fr, probe_eval,
                     quasi_concurrence, von_neumann_entropy, wootters_spectrum)
from .measure import (Classification, MeasureResult, PairProfile, additivity_check, classify,
                      embed_with_blank, genuine_global, measure_m, normalization_factor,
                      pair_profile, ssa_falsify)
from .convexroof import convex_roof, eigen_ensemble, pairwise_condition_check, steer_ensemble
from .locc import (LocalInstrument, apply_instrument, locc_campaign, locc_monotonicity_trial,
                   projective_instrument, random_instrument)

__version__ = "0.1.0"
