"""Finite-interval difference (TGD) operators and their applications:
1D signal denoising, 2D edge detection, and 3D spatio-temporal edge
detection, with synthetic data generators and quality metrics."""

from .conv import convolve, valid_region
from .denoise import DenoiseConfig, denoise, gaussian_smooth, loss_gradient, loss_terms, total_loss
from .edge2d import (EdgeResult, GradientField, detect_edges_first_order, detect_edges_lot,
                     gradient_field, hysteresis, non_max_suppression, zero_crossings)
from .edge3d import Edge3DResult, FrameSequence, detect_3d, hsv_merge, scale_time
from .errors import (ConfigError, DataError, DivergenceError, OperatorNotFoundError,
                     ShapeError, TgdError)
from .metrics import (MetricReport, NoiseSpec, add_noise, psnr, report, rmse, snr_db,
                      ssim, synth_phantom, synth_signal)
from .operators import (KernelProfile, Operator, build_directional_2d, build_first_order_1d,
                        build_first_order_3d, build_lot_2d, build_second_order_1d,
                        preset, preset_names, profile_value)

__version__ = "0.1.0"
