"""Configuration files and sweep specifications.

Plain INI-style key/value text with three sections::

    [simulation]
    resource_count = 100
    change_interval = 0.1
    sync_interval = 10
    mode = baseline
    max_representation_size = 1000
    duration = 2000
    seed = 1
    change_mix = 0,1,0

    [network]
    bandwidth = 20000
    per_request_overhead = 0.002

    [sweep]                      ; presence makes the file a sweep spec
    resource_counts = 100,1000,10000
    change_intervals = 0.1,10
    sync_intervals = 10,100
    modes = baseline,incremental
    seeds = 1,2

Unknown sections or keys are rejected.  [simulation]/[network] provide the
shared defaults for every sweep cell.
"""

import configparser
from dataclasses import dataclass, replace
from typing import List, Tuple, Union

from .errors import ConfigError
from .simnet import NetworkModel
from .simulator import SimConfig

_SIMULATION_KEYS = {"resource_count", "change_interval", "sync_interval",
                    "mode", "max_representation_size", "duration", "seed",
                    "change_mix"}
_NETWORK_KEYS = {"bandwidth", "per_request_overhead"}
_SWEEP_KEYS = {"resource_counts", "change_intervals", "sync_intervals",
               "modes", "seeds"}


@dataclass(frozen=True)
class SweepSpec:
    """Cartesian grid of simulation cells sharing one base config."""

    resource_counts: Tuple[int, ...]
    change_intervals: Tuple[float, ...]
    sync_intervals: Tuple[float, ...]
    modes: Tuple[str, ...]
    seeds: Tuple[int, ...]
    base: SimConfig

    def __post_init__(self):
        for name in ("resource_counts", "change_intervals", "sync_intervals",
                     "modes", "seeds"):
            if not getattr(self, name):
                raise ConfigError("list must be non-empty", key="sweep.%s" % name)

    def cells(self) -> List[SimConfig]:
        out = []
        for count in self.resource_counts:
            for ci in self.change_intervals:
                for si in self.sync_intervals:
                    for mode in self.modes:
                        for seed in self.seeds:
                            out.append(replace(
                                self.base, resource_count=count,
                                change_interval=ci, sync_interval=si,
                                sync_mode=mode, seed=seed).validate())
        return out


def _convert(section, key, raw, conv):
    try:
        return conv(raw)
    except ValueError:
        raise ConfigError("cannot parse value %r" % raw,
                          key="%s.%s" % (section, key)) from None


def _parse_mix(section, key, raw):
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) != 3:
        raise ConfigError("change_mix needs 3 comma-separated weights",
                          key="%s.%s" % (section, key))
    return tuple(_convert(section, key, p, float) for p in parts)


def _parse_list(section, key, raw, conv):
    values = tuple(_convert(section, key, p.strip(), conv)
                   for p in raw.split(",") if p.strip())
    if not values:
        raise ConfigError("empty list", key="%s.%s" % (section, key))
    return values


def parse_config(data: Union[bytes, str]) -> Union[SimConfig, SweepSpec]:
    """Parse a config file; returns a SweepSpec when [sweep] is present."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(data)
    except configparser.Error as exc:
        raise ConfigError("bad config syntax: %s" % exc) from None

    for section in parser.sections():
        if section not in ("simulation", "network", "sweep"):
            raise ConfigError("unknown section", key=section)
    allowed = {"simulation": _SIMULATION_KEYS, "network": _NETWORK_KEYS,
               "sweep": _SWEEP_KEYS}
    for section, keys in allowed.items():
        if parser.has_section(section):
            for key in parser[section]:
                if key not in keys:
                    raise ConfigError("unknown key", key="%s.%s" % (section, key))

    kwargs = {}
    if parser.has_section("simulation"):
        sim = parser["simulation"]
        if "resource_count" in sim:
            kwargs["resource_count"] = _convert("simulation", "resource_count",
                                                sim["resource_count"], int)
        if "change_interval" in sim:
            kwargs["change_interval"] = _convert("simulation", "change_interval",
                                                 sim["change_interval"], float)
        if "sync_interval" in sim:
            kwargs["sync_interval"] = _convert("simulation", "sync_interval",
                                               sim["sync_interval"], float)
        if "mode" in sim:
            kwargs["sync_mode"] = sim["mode"].strip()
        if "max_representation_size" in sim:
            kwargs["max_representation_size"] = _convert(
                "simulation", "max_representation_size",
                sim["max_representation_size"], int)
        if "duration" in sim:
            kwargs["duration"] = _convert("simulation", "duration",
                                          sim["duration"], float)
        if "seed" in sim:
            kwargs["seed"] = _convert("simulation", "seed", sim["seed"], int)
        if "change_mix" in sim:
            kwargs["change_mix"] = _parse_mix("simulation", "change_mix",
                                              sim["change_mix"])
    if parser.has_section("network"):
        net = parser["network"]
        defaults = NetworkModel(20_000.0, 0.002)
        bandwidth = _convert("network", "bandwidth",
                             net.get("bandwidth", str(defaults.bandwidth)), float)
        overhead = _convert("network", "per_request_overhead",
                            net.get("per_request_overhead",
                                    str(defaults.per_request_overhead)), float)
        try:
            kwargs["network"] = NetworkModel(bandwidth, overhead)
        except ValueError as exc:
            raise ConfigError(str(exc), key="network") from None

    try:
        base = SimConfig(**kwargs).validate()
    except ConfigError as exc:
        raise ConfigError(str(exc), key="simulation") from None

    if not parser.has_section("sweep"):
        return base

    sweep = parser["sweep"]
    return SweepSpec(
        resource_counts=_parse_list("sweep", "resource_counts",
                                    sweep.get("resource_counts",
                                              str(base.resource_count)), int),
        change_intervals=_parse_list("sweep", "change_intervals",
                                     sweep.get("change_intervals",
                                               str(base.change_interval)), float),
        sync_intervals=_parse_list("sweep", "sync_intervals",
                                   sweep.get("sync_intervals",
                                             str(base.sync_interval)), float),
        modes=tuple(m.strip() for m in
                    sweep.get("modes", base.sync_mode).split(",") if m.strip()),
        seeds=_parse_list("sweep", "seeds", sweep.get("seeds", str(base.seed)), int),
        base=base,
    )
