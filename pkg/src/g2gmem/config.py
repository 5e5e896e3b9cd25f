"""Flat `key = value` run configuration."""

from __future__ import annotations

from dataclasses import dataclass, field, fields

from .errors import ConfigError


@dataclass
class Config:
    # feature pipeline
    pipeline_d_h: int = 64
    pipeline_L: int = 4
    pipeline_S: int = 8
    pipeline_d_zeta: int = 64
    pipeline_mlp_hidden: int = 0          # 0 -> d_zeta
    # interactor
    interactor_variant: str = "gatv2"
    interactor_d_xi: int = 64
    interactor_heads: int = 4
    interactor_layers: int = 0            # 0 -> variant default
    interactor_activation: str = "elu"
    # loss weights
    loss_lambda: float = 0.1
    loss_eta: float = 0.1
    # training
    train_epochs: int = 100
    train_proto_iters: int = 20
    train_lr: float = 1e-4
    train_beta1: float = 0.9
    train_beta2: float = 0.999
    train_epsilon: float = 1e-8
    train_batch_size: int = 32
    train_seed: int = 0
    # data
    data_train_path: str = ""
    data_test_path: str = ""
    # synthetic generation (used when no data paths are given)
    synth_per_class: int = 25
    synth_test_per_class: int = 20
    synth_cluster_sigma: float = 0.05
    # session protocol
    protocol_base_classes: int = 10
    protocol_sessions: int = 4            # incremental session count
    protocol_ways: int = 2
    protocol_shots: int = 5
    # augmentation handling
    augment_use_stored: bool = True
    augment_sigma_scale: float = 0.05
    augment_rehearsal_views: bool = True

    def validate(self) -> "Config":
        if self.train_proto_iters > self.train_epochs:
            raise ConfigError(
                f"train.proto_iters={self.train_proto_iters} exceeds "
                f"train.epochs={self.train_epochs}")
        if self.train_lr <= 0:
            raise ConfigError("train.lr must be positive")
        if self.loss_lambda < 0 or self.loss_eta < 0:
            raise ConfigError("loss weights must be non-negative")
        return self


def _key_to_attr(key: str) -> str:
    return key.strip().replace(".", "_").replace("-", "_")


_ATTR_TYPES = {f.name: f.type for f in fields(Config)}


def _parse_value(attr: str, raw: str):
    kind = _ATTR_TYPES[attr]
    raw = raw.strip()
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"bad boolean {raw!r} for {attr}")
    return raw


def parse_config_text(text: str) -> Config:
    cfg = Config()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected `key = value`")
        key, raw = stripped.split("=", 1)
        attr = _key_to_attr(key)
        if attr not in _ATTR_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key.strip()!r}")
        setattr(cfg, attr, _parse_value(attr, raw))
    return cfg.validate()


def load_config(path) -> Config:
    with open(path, "r", encoding="utf-8") as f:
        return parse_config_text(f.read())


def dump_config(cfg: Config) -> str:
    lines = []
    for f in fields(Config):
        key = f.name.replace("_", ".", 1)
        lines.append(f"{key} = {getattr(cfg, f.name)}")
    return "\n".join(lines) + "\n"
