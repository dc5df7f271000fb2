"""Models for the whole project."""
from typing import Any, ClassVar, Literal, Optional, Tuple

import numpy as np
from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    field_validator,
    model_validator,
)
from typing_extensions import Annotated
from pydantic_settings import BaseSettings, SettingsConfigDict

from voxfield.utils.log import normalize_level

# Supplementary street-scene taxonomy; index == class id.
TAXONOMY: Tuple[str, ...] = (
    'road',
    'sidewalk',
    'building',
    'wall',
    'fence',
    'pole',
    'traffic light',
    'traffic sign',
    'vegetation',
    'terrain',
    'sky',
    'person',
    'rider',
    'car',
    'truck',
    'bus',
    'train',
    'motorcycle',
    'bicycle',
    'road-lane',
)
CLASS_COUNT = len(TAXONOMY)
# In-memory NULL label; it doubles as the row of the learned null embedding.
NULL_LABEL = CLASS_COUNT
# NULL as written in VXF and .sem files.
NULL_LABEL_ON_DISK = 255

ROAD = TAXONOMY.index('road')
SIDEWALK = TAXONOMY.index('sidewalk')
BUILDING = TAXONOMY.index('building')
POLE = TAXONOMY.index('pole')
ROAD_LANE = TAXONOMY.index('road-lane')


def is_valid_label(label: int) -> bool:
    """Return True for class ids 0..19 and NULL."""
    return 0 <= int(label) < CLASS_COUNT or int(label) == NULL_LABEL


def _split_tuple(value: Any) -> Any:
    if isinstance(value, str):
        parts = value.replace(',', ' ').split()
        return tuple(parts)
    return value


FloatTriple = Annotated[Tuple[float, float, float], BeforeValidator(_split_tuple)]
IntTriple = Annotated[Tuple[int, int, int], BeforeValidator(_split_tuple)]
FloatTuple = Annotated[Tuple[float, ...], BeforeValidator(_split_tuple)]
IntTuple = Annotated[Tuple[int, ...], BeforeValidator(_split_tuple)]


class Settings(BaseSettings):
    """Base settings for a run, overridable through `VOXFIELD_*` env vars."""

    log_level: str = 'INFO'
    workers: int = 1

    model_config = SettingsConfigDict(env_prefix='VOXFIELD_')

    @field_validator('log_level')
    @classmethod
    def _known_level(cls, value: str) -> str:
        return normalize_level(value)

    @field_validator('workers')
    @classmethod
    def _positive_workers(cls, value: int) -> int:
        if value < 1:
            raise ValueError('workers must be >= 1')
        return value


class RunModel(BaseModel):
    """Base for every command configuration: unknown keys are rejected."""

    model_config = ConfigDict(extra='forbid', validate_assignment=True)

    # Name of the field the global `--seed` flag writes to.
    seed_field: ClassVar[str] = 'seed'


class SceneSpec(RunModel):
    """Procedural street scene parameters."""

    extent: FloatTriple = (36.0, 18.0, 10.0)
    road_width: float = 7.0
    lane_stripe_period: float = 6.0
    building_count: int = 6
    pole_count: int = 6
    ground_height: float = 0.3
    rng_seed: int = 0

    seed_field: ClassVar[str] = 'rng_seed'

    @model_validator(mode='after')
    def _check_lengths(self):
        if any(e <= 0 for e in self.extent):
            raise ValueError('extent components must be > 0')
        if self.road_width <= 0 or self.lane_stripe_period <= 0:
            raise ValueError('road_width and lane_stripe_period must be > 0')
        if self.road_width >= self.extent[1]:
            raise ValueError('road_width must be smaller than the y extent')
        if self.building_count < 0 or self.pole_count < 0:
            raise ValueError('building_count and pole_count must be >= 0')
        return self


class ScheduleConfig(RunModel):
    """Noise schedule parameters.

    With `scale_to_T` the betas are given for a 1000-step chain and rescaled by
    1000 / T, so short desk-scale chains still end close to pure noise.
    """

    T: int = 100
    beta_start: float = 1e-4
    beta_end: float = 0.02
    scale_to_T: bool = True

    def build(self):
        """Return the NoiseSchedule described by this config."""
        from voxfield.diffusion.schedule import make_schedule

        factor = 1000.0 / self.T if self.scale_to_T else 1.0
        return make_schedule(
            self.T,
            min(self.beta_start * factor, 0.999),
            min(self.beta_end * factor, 0.999),
        )


class DenoiserConfig(RunModel):
    """Architecture of the token-set denoiser.

    Desk-scale defaults; 1024 / 12 layers / 8x128 is accepted too.
    """

    n: int = 20
    model_dim: int = 64
    layer_count: int = 2
    head_count: int = 4
    head_dim: int = 16
    mlp_ratio: int = 2
    timestep_embedding_dim: int = 64
    pe_dim: int = 48
    attention_radius: float = 3.0
    dtype: Literal['float32', 'float64'] = 'float32'

    @property
    def token_dim(self) -> int:
        """Return 6n."""
        return 6 * self.n

    @model_validator(mode='after')
    def _check_dims(self):
        if self.model_dim != self.head_count * self.head_dim:
            raise ValueError(
                'model_dim ({}) must equal head_count x head_dim ({} x {})'.format(
                    self.model_dim, self.head_count, self.head_dim
                )
            )
        if self.attention_radius <= 0:
            raise ValueError('attention_radius must be > 0')
        if self.pe_dim % 6 != 0:
            raise ValueError('pe_dim must be divisible by 6')
        if self.timestep_embedding_dim % 2 != 0:
            raise ValueError('timestep_embedding_dim must be even')
        if self.n < 1:
            raise ValueError('n must be >= 1')
        return self

    def denoiser(self) -> 'DenoiserConfig':
        """Return only the architecture fields (drops subclass extras)."""
        return DenoiserConfig(
            **{k: getattr(self, k) for k in DenoiserConfig.model_fields}
        )


class ConvertConfig(RunModel):
    """`convert`: mesh to VXF grid."""

    voxel_size: float = 0.6
    n: int = 20
    origin: FloatTriple = (0.0, 0.0, 0.0)
    workers: int = 1
    seed: int = 0

    @model_validator(mode='after')
    def _check(self):
        if self.voxel_size <= 0:
            raise ValueError('voxel_size must be > 0')
        if self.n < 1:
            raise ValueError('n must be >= 1')
        return self


class TrainRunConfig(DenoiserConfig, ScheduleConfig):
    """`train`: VXF corpus to checkpoint."""

    steps: int = 200
    batch_size: int = 4
    learning_rate: float = 5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    cfg_dropout: float = 0.1
    set_size_min: int = 50
    set_size_max: int = 150
    log_every: int = 50
    seed: int = 0

    @model_validator(mode='after')
    def _check_training(self):
        if not 0.0 <= self.cfg_dropout <= 1.0:
            raise ValueError('cfg_dropout must be in [0, 1]')
        if not 1 <= self.set_size_min <= self.set_size_max:
            raise ValueError('need 1 <= set_size_min <= set_size_max')
        if self.steps < 1 or self.batch_size < 1:
            raise ValueError('steps and batch_size must be >= 1')
        return self

    def schedule(self):
        """Return the noise schedule."""
        return ScheduleConfig(
            T=self.T,
            beta_start=self.beta_start,
            beta_end=self.beta_end,
            scale_to_T=self.scale_to_T,
        ).build()


class GenerateConfig(ScheduleConfig):
    """`generate`: semantic skeleton to generated VXF grid."""

    K: int = 150
    T_cov: int = 30
    guidance_scale: float = 4.0
    resample_count: int = 1
    repaint_mode: Literal['repaint', 'overwrite'] = 'repaint'
    seed_index: Optional[IntTriple] = None
    complete_coverage: bool = True
    seed: int = 0

    @model_validator(mode='after')
    def _check(self):
        if not self.K >= self.T_cov >= 1:
            raise ValueError('need K >= T_cov >= 1')
        if self.resample_count < 1:
            raise ValueError('resample_count must be >= 1')
        return self


class RenderRunConfig(RunModel):
    """`render`: VXF grid plus trajectory to frames."""

    splat_radius: float = 0.04
    normal_k: int = 16
    normal_radius: float = 1.2
    background: FloatTriple = (0.0, 0.0, 0.0)
    frames: int = 8
    width: int = 256
    height: int = 128
    fx: float = 180.0
    camera_height: float = 1.6
    workers: int = 1
    seed: int = 0

    @model_validator(mode='after')
    def _check(self):
        if self.splat_radius <= 0:
            raise ValueError('splat_radius must be > 0')
        if self.normal_k < 3:
            raise ValueError('normal_k must be >= 3')
        if any(not 0.0 <= c <= 1.0 for c in self.background):
            raise ValueError('background components must be in [0, 1]')
        return self


class EvalConfig(RunModel):
    """`eval chamfer`: geometric fidelity sweep."""

    n_sweep: IntTuple = (1, 2, 5, 10, 20, 40)
    probe_count: int = 20000
    seed: int = 0

    @model_validator(mode='after')
    def _check(self):
        if self.probe_count < 1:
            raise ValueError('probe_count must be > 0')
        if not self.n_sweep or min(self.n_sweep) < 1:
            raise ValueError('n_sweep must hold positive counts')
        return self


class MmdConfig(RunModel):
    """`eval mmd`: token MMD between two VXF corpora."""

    bandwidth: Optional[float] = None
    max_tokens: int = 2000
    seed: int = 0

    @model_validator(mode='after')
    def _check(self):
        if self.bandwidth is not None and self.bandwidth <= 0:
            raise ValueError('bandwidth must be > 0')
        if self.max_tokens < 2:
            raise ValueError('max_tokens must be >= 2')
        return self


class Camera(BaseModel):
    """Pinhole camera with a rigid world-to-camera transform.

    Camera axes: x right, y down, z forward.
    """

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    pose: FloatTuple

    model_config = ConfigDict(extra='forbid', frozen=True)

    @model_validator(mode='after')
    def _check(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError('fx and fy must be > 0')
        if self.width < 0 or self.height < 0:
            raise ValueError('width and height must be >= 0')
        if len(self.pose) != 12:
            raise ValueError('pose needs 12 reals (3x4 row-major)')
        rotation = self.rotation
        if not np.allclose(rotation.T @ rotation, np.eye(3), atol=1e-6):
            raise ValueError('pose rotation is not orthonormal')
        return self

    @property
    def matrix(self) -> np.ndarray:
        """Return the 3x4 world-to-camera matrix."""
        return np.asarray(self.pose, dtype=np.float64).reshape(3, 4)

    @property
    def rotation(self) -> np.ndarray:
        """Return the world-to-camera rotation."""
        return self.matrix[:, :3]

    @property
    def translation(self) -> np.ndarray:
        """Return the world-to-camera translation."""
        return self.matrix[:, 3]

    @property
    def position(self) -> np.ndarray:
        """Return the camera center in world coordinates."""
        return -self.rotation.T @ self.translation
