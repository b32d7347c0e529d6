"""Experiment configuration (a single JSON document)."""

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

METHODS = ("vi", "sgd", "adam")


class ConfigError(ValueError):
    pass


@dataclass
class DataConfig:
    image_size: int = 32
    patch_size: int = 16
    n_train: int = 12
    n_test: int = 12
    batch_size: int = 4
    noise_std: float = 0.07
    n_ellipses: int = 8


@dataclass
class NetworkConfig:
    channels: list = field(default_factory=lambda: [1, 8, 8])
    kernel_size: int = 3
    slope: float = 0.01


@dataclass
class LayerConfig:
    kernel_size: int = 5
    activation: str = "leaky_relu:0.001"
    constraint: str = "none"
    bias: bool = False


@dataclass
class VIConfig:
    gamma_fraction: float = 0.95
    algorithm: str = "alg2"


@dataclass
class SGDConfig:
    lr: float = 0.003
    loss: str = "l1"


@dataclass
class AdamConfig:
    lr: float = 0.01
    loss: str = "l1"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class ExperimentConfig:
    seed: int = 0
    epochs: int = 200
    timing: bool = False
    data: DataConfig = field(default_factory=DataConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    layer: LayerConfig = field(default_factory=LayerConfig)
    vi: VIConfig = field(default_factory=VIConfig)
    sgd: SGDConfig = field(default_factory=SGDConfig)
    adam: AdamConfig = field(default_factory=AdamConfig)

    def validate(self):
        d = self.data
        if d.noise_std < 0:
            raise ConfigError("data.noise_std must be >= 0")
        if d.image_size % d.patch_size:
            raise ConfigError("data.image_size must be a multiple of data.patch_size")
        for split, n in (("n_train", d.n_train), ("n_test", d.n_test)):
            if n < 1 or n % d.batch_size:
                raise ConfigError(f"data.batch_size must divide data.{split} ({n})")
        if not 0 < self.vi.gamma_fraction < 1:
            raise ConfigError("vi.gamma_fraction must lie in (0, 1)")
        if self.vi.algorithm not in ("alg1", "alg2"):
            raise ConfigError("vi.algorithm must be 'alg1' or 'alg2'")
        for name in ("sgd", "adam"):
            cfg = getattr(self, name)
            if cfg.lr <= 0:
                raise ConfigError(f"{name}.lr must be positive")
            if cfg.loss not in ("l1", "l2"):
                raise ConfigError(f"{name}.loss must be 'l1' or 'l2'")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if len(self.network.channels) < 2 or self.network.channels[0] != 1:
            raise ConfigError("network.channels must start at 1 and list at least one layer")
        return self

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


_SECTIONS = {"data": DataConfig, "network": NetworkConfig, "layer": LayerConfig,
             "vi": VIConfig, "sgd": SGDConfig, "adam": AdamConfig}


def _build(cls, raw, where):
    if not isinstance(raw, dict):
        raise ConfigError(f"{where} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    return cls(**raw)


def config_from_dict(raw) -> ExperimentConfig:
    raw = dict(raw)
    sections = {k: _build(cls, raw.pop(k), k) for k, cls in _SECTIONS.items() if k in raw}
    try:
        cfg = _build(ExperimentConfig, raw, "config")
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    for k, v in sections.items():
        setattr(cfg, k, v)
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return config_from_dict(raw)
