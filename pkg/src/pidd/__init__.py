"""Physics-informed multi-shot diffusion MRI toolkit.

Synthesizes paired multi-shot data with inter-shot motion phase,
reconstructs it classically through phase-modulation kernels or a
structured low-rank projection, and trains a small unrolled network
that learns the kernel interpolation from data.
"""

from ._kernels import BACKEND as kernel_backend
from .errors import DataError, NumericalError, UsageError
from .grids import ComplexGrid, CoilSet, SamplingMask, interleaved_mask
from .lowrank import (low_rank_complete, pf_postprocess, structured_adjoint,
                      structured_matrix, svt_project)
from .metrics import (aggregate, fit_diffusion_tensor, gsr, psnr,
                      realized_snr)
from .modulations import (MotionKernelSet, PhaseModulationMatrix,
                          convolve_kspace, kernels_from_modulations,
                          modulation_mosaic, modulations_from_kernels,
                          phase_modulations)
from .network import (NetworkConfig, WeightSet, extract_learned_modulations,
                      identity_weights, init_weights, loss_gradients,
                      mkl_backward, mkl_forward, multiblock_loss,
                      unrolled_backward, unrolled_forward)
from .operators import adjoint_mask, apply_mask, coil_combine, coil_expand
from .parrio import read_parr, write_parr
from .phantom import (PhantomSpec, TensorPhantom, fractional_anisotropy,
                      load_phantom, make_phantom)
from .pocs import (PocsResult, ReconConfig, data_consistency,
                   density_compensated, pocs_reconstruct, zero_filled)
from .synth import (DiffusionProtocol, MultiShotSample,
                    PolynomialPhaseCoeffs, SynthesisSpec, add_noise,
                    assemble_ground_truth, generate_dataset, make_coils,
                    make_sample, sample_phase_coeffs, sample_rng,
                    synth_magnitude, synth_motion_phase)
from .training import (TrainConfig, TrainingSet, combined_target,
                       load_weights, save_weights, train_network)
from .transforms import dft2_centered, fft2c, idft2_centered, ifft2c

__version__ = "0.1.0"
