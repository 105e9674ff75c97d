"""krawtex: Krawtchouk transform-domain image dehazing toolkit."""
from .krawtchouk import (
    BasisSet,
    KrawtchoukParams,
    PolynomialMatrix,
    basis_set,
    hyp2f1_terminating,
    krawtchouk_poly,
    norm_rho,
    pochhammer,
    polynomial_matrix,
    weight,
    zigzag_order,
)
from .image import PlanarImage
from .transform import (
    BandStats,
    FrequencyCube,
    band_energy_stats,
    forward_moments,
    ikcl_exact,
    inverse_moments,
    kcl_apply,
    merge_cube,
    split_cube,
)
from .color import YCbCrImage, rgb_to_ycbcr, ycbcr_to_rgb
from .haze import (
    HazeScene,
    dark_channel,
    dcp_dehaze,
    estimate_airlight,
    make_depth,
    synthesize_haze,
    transmission_from_depth,
)
from .metrics import MetricReport, psnr, ssim
from .dataio import DatasetManifest, load_image, load_manifest, sample_patches, save_image
from .pipeline import dehaze_rgb, dehaze_ycbcr

__version__ = "0.1.0"
