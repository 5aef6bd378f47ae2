"""Neural-operator surrogates for inhomogeneous Helmholtz solves."""

from .data import FieldTripleDataset, GridInfo, read_manifest, read_record_arrays
from .losses import data_loss, pde_residual_norm, relative_l2, total_loss
from .series import NetworkConfig, NeumannSeriesModel, build_model, parameter_count
from .spectral import FNO2d, FourierLayer, ModeConfigError, SpectralConv2d
from .training import TrainConfig, evaluate, load_checkpoint, save_checkpoint, train
from .uno import UNO2d

__version__ = "0.1.0"
