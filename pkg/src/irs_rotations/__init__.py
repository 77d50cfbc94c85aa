"""Random IRS phase rotations in the multi-user MISO broadcast channel.

Modules
-------
geometry
    Array layouts and the spherical-wave LoS BS-IRS matrix.
channel
    Random IRS phases, Rayleigh fading and the channel covariance.
beamforming
    RBF/DBF/ZF schedulers and the coherent exhaustive IRS search.
analysis
    SINR law, extreme-value growth and sum-rate scaling laws.
ee
    Energy-efficiency objective and its solvers.
harness
    Configuration, path gains, experiment campaigns and file output.
"""

from .analysis import (ScalingParams, SinrLaw, scaling_dbf, scaling_dpc,
                       scaling_no_irs_rbf, scaling_rbf)
from .beamforming import (BeamformerSet, ScheduleOutcome, coherent_exhaustive,
                          dbf_matrix, isotropic_beams, rbf_schedule, zfs_schedule)
from .channel import (ChannelRealization, CovarianceModel, IrsResponse,
                      compose_channel, covariance, draw_fading, draw_irs_phases)
from .ee import EEProblem, EESolution, PowerModel, algorithm1, algorithm2, exhaustive_ee
from .geometry import ArrayGeometry, element_positions, los_channel, principal_unit_vectors

__version__ = "0.1.0"
