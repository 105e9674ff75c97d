"""Desk-scale differentiable pipeline: layers, models, losses, training."""
from .layers import (
    AttentionGate,
    AvgPool2,
    BatchNorm2d,
    Conv2d,
    DenseBlock,
    GlobalAvgPool,
    LayerSpec,
    LeakyReLU,
    Module,
    NearestUp2,
    Parameter,
    Sigmoid,
    Softplus,
    conv2d_backward,
    conv2d_forward,
)
from .generator import Generator, GeneratorConfig, KrawtchoukAnalysis, KrawtchoukSynthesis
from .discriminator import Discriminator
from .losses import (
    FeatureBank,
    LossWeights,
    feature_loss,
    gan_losses,
    mse_loss,
    smooth_l1_loss,
    total_loss,
)
from .optim import Adam
from .checkpoint import load_checkpoint, save_checkpoint
from .training import (
    LossRecord,
    ModelState,
    Tensor4,
    TrainingError,
    run_training,
    train_step,
)
from .gradcheck import gradient_check, run_standard_checks
