"""Flat INI configuration: sections [network], [train], [eval], [io].

Parsing is strict (unknown sections or keys are rejected) and total: every
accepted file maps to exactly one Config, and re-serializing then re-parsing
yields an equal Config.  Defaults reproduce the published training recipe."""

from __future__ import annotations

import configparser
import io as _io
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .blocks import BlockConfig
from .errors import ConfigError
from .network import NetworkConfig
from .training import TrainConfig


@dataclass(frozen=True)
class EvalConfig:
    dataset_dir: str = ""
    tile: int = 192
    overlap: int = 16
    shave: int = -1  # -1: use the scale factor


@dataclass(frozen=True)
class IOConfig:
    checkpoint: str = "model.osr1"
    log: str = "train.log"


@dataclass(frozen=True)
class Config:
    network: NetworkConfig = field(default_factory=NetworkConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    io: IOConfig = field(default_factory=IOConfig)


# [network] keys that live on the nested block config
_BLOCK_KEYS = ("heads", "window", "ffn_expansion", "lcb_expansion", "se_reduction",
               "esa_reduction", "lcb_depth", "channel_wiring", "spatial_stage",
               "channel_stage", "use_esa", "se_in_attention")
_NETWORK_KEYS = ("groups", "channels", "scale", "in_channels", "seed")


def _convert(raw: str, ftype, key: str):
    if ftype is bool or ftype == "bool":
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected boolean, got {raw!r}")
    if ftype is int or ftype == "int":
        return int(raw)
    if ftype is float or ftype == "float":
        return float(raw)
    if ftype is tuple or ftype == "tuple":
        return tuple(int(v) for v in raw.split(",") if v.strip())
    return raw


def _field_types(cls) -> dict:
    return {f.name: f.type for f in fields(cls)}


def _parse_section(parser, section: str, cls, skip=()) -> dict:
    ftypes = _field_types(cls)
    out = {}
    if not parser.has_section(section):
        return out
    for key, raw in parser.items(section):
        if key in skip:
            continue
        if key not in ftypes:
            raise ConfigError(f"unknown key {key!r} in section [{section}]")
        out[key] = _convert(raw, ftypes[key], f"[{section}] {key}")
    return out


def config_from_ini(text: str) -> Config:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    known = {"network", "train", "eval", "io"}
    unknown = set(parser.sections()) - known
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")

    block_kwargs = {}
    net_kwargs = {}
    if parser.has_section("network"):
        btypes = _field_types(BlockConfig)
        ntypes = _field_types(NetworkConfig)
        for key, raw in parser.items("network"):
            if key in _BLOCK_KEYS:
                block_kwargs[key] = _convert(raw, btypes[key], f"[network] {key}")
            elif key in _NETWORK_KEYS:
                net_kwargs[key] = _convert(raw, ntypes[key], f"[network] {key}")
            else:
                raise ConfigError(f"unknown key {key!r} in section [network]")
    channels = net_kwargs.get("channels", NetworkConfig.channels)
    network = NetworkConfig(block=BlockConfig(channels=channels, **block_kwargs), **net_kwargs)
    train = TrainConfig(**_parse_section(parser, "train", TrainConfig))
    evalc = EvalConfig(**_parse_section(parser, "eval", EvalConfig))
    ioc = IOConfig(**_parse_section(parser, "io", IOConfig))
    return Config(network=network, train=train, eval=evalc, io=ioc)


def config_load(path: str | Path) -> Config:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_ini(text)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def config_to_ini(cfg: Config) -> str:
    parser = configparser.ConfigParser(interpolation=None)
    net = {k: getattr(cfg.network, k) for k in _NETWORK_KEYS}
    net.update({k: getattr(cfg.network.block, k) for k in _BLOCK_KEYS})
    parser["network"] = {k: _fmt(v) for k, v in net.items()}
    parser["train"] = {f.name: _fmt(getattr(cfg.train, f.name)) for f in fields(TrainConfig)}
    parser["eval"] = {f.name: _fmt(getattr(cfg.eval, f.name)) for f in fields(EvalConfig)}
    parser["io"] = {f.name: _fmt(getattr(cfg.io, f.name)) for f in fields(IOConfig)}
    buf = _io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def paper_config(scale: int = 4) -> Config:
    """The published hyperparameters: K=5, C=64, 4 heads, window 8."""
    return Config(network=NetworkConfig(scale=scale))
