"""Toy torch reference of the matting network stack."""

from .gradcheck import (
    GRADCHECK_STEP,
    GRADCHECK_TOL,
    autodiff_grad,
    finite_difference_grad,
    loss_gradcheck,
)
from .losses import (
    alpha_l1,
    composition_l1,
    foreground_constraint,
    fuse_t,
    joint_loss_t,
    laplacian_loss_t,
    laplacian_pyramid_t,
    matting_loss_t,
)
from .models import (
    DenseBlock,
    DensePN,
    DensePNConfig,
    DensePNLayer,
    FusionLayer,
    ResidualBlock,
    STNStub,
    ToyEncoder,
    ToyEncoderConfig,
    build_densepn,
    build_stn_stub,
)
from .ptmio import PTM_MAGIC, read_ptm_file, write_ptm_file
from .training import LOG_FIELDS, load_training_batch, train_joint

__version__ = "0.1.0"
