"""Dense reverse-mode differentiation for the denoiser."""
from voxfield.autograd.tensor import Tape, Tensor, backward, recording  # noqa: F401
