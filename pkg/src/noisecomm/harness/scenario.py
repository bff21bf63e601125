"""Scenario files.

A scenario is a flat ``key = value`` text file; ``#`` starts a comment.
Recognised keys::

    name, seed, trials, outputs, variance_source (measured | predicted)
    loads                    comma-separated preset or custom load names
    load.<name>.<field>      custom load: impedance_re, impedance_im,
                             physical_temp, measured_msv
    chain.<field>            gain_rx, offset, bandwidth, shunt_r, lna_noise_temp
    modem.<field>            subcarrier_hz, sample_rate_hz, cycles_per_bit,
                             threshold_policy, fixed_threshold, preamble (e.g.
                             1110010), payload_bits, power, correlation_floor
    link.<field>             distance, tx_gain_dbi, rx_gain_dbi, frequency_hz,
                             tx_contrast (link constant, SDR units^2)
    anchor.<field>           rate, distance, ber; solves tx_contrast when it
                             is not given
    run.<key>                experiment parameters, see each runner

Unknown top-level keys and unknown fields are configuration errors.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from ..channel import LinkBudget
from ..errors import ConfigError, DomainError
from ..modem import ModemConfig
from ..noise_physics import PRESETS, LoadProfile
from ..receiver_model import ReceiverChain

_TOP = {"name", "seed", "trials", "outputs", "variance_source", "loads"}
_LOAD_FIELDS = {"impedance_re", "impedance_im", "physical_temp", "measured_msv"}
_ANCHOR_FIELDS = {"rate", "distance", "ber"}


@dataclass
class Scenario:
    name: str = "scenario"
    loads: list[LoadProfile] = field(default_factory=list)
    chain: ReceiverChain = field(default_factory=ReceiverChain)
    modem: ModemConfig = field(default_factory=ModemConfig)
    link: LinkBudget | None = None
    tx_contrast: float | None = None
    anchor: dict[str, float] = field(default_factory=dict)
    trials: int = 100
    seed: int = 0
    outputs: str = "out"
    variance_source: str = "measured"
    params: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be >= 0")
        if self.variance_source not in ("measured", "predicted"):
            raise ConfigError(f"variance_source must be measured or predicted, not {self.variance_source!r}")

    def load(self, name: str) -> LoadProfile:
        for ld in self.loads:
            if ld.name == name:
                return ld
        if name in PRESETS:
            return PRESETS[name]
        raise ConfigError(f"scenario {self.name!r} does not define load {name!r}")

    # typed access to run.* parameters
    def param(self, key: str, default=None, kind=str):
        if key not in self.params:
            if default is None:
                raise ConfigError(f"scenario {self.name!r} is missing run.{key}")
            return default
        raw = self.params[key]
        try:
            if kind is list:
                return [s.strip() for s in raw.split(",") if s.strip()]
            if kind is tuple:
                return [float(s) for s in raw.split(",") if s.strip()]
            return kind(raw)
        except ValueError:
            raise ConfigError(f"run.{key}: cannot parse {raw!r} as {kind.__name__}") from None

    def with_overrides(self, seed=None, trials=None, outputs=None) -> "Scenario":
        changes = {k: v for k, v in (("seed", seed), ("trials", trials), ("outputs", outputs)) if v is not None}
        return replace(self, **changes)


def _num(key: str, raw: str, kind=float):
    try:
        return kind(float(raw)) if kind is int else kind(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from None


def _coerce(cls, key: str, fields: dict[str, str]) -> dict:
    known = {f.name: f for f in dataclasses.fields(cls)}
    out = {}
    for name, raw in fields.items():
        if name not in known:
            raise ConfigError(f"unknown key {key}.{name}")
        default = known[name].default
        if name == "preamble":
            if not raw or any(c not in "01" for c in raw):
                raise ConfigError(f"{key}.preamble must be a 0/1 string")
            out[name] = tuple(int(c) for c in raw)
        elif isinstance(default, bool):
            out[name] = raw.lower() in ("1", "true", "yes")
        elif isinstance(default, int):
            out[name] = _num(f"{key}.{name}", raw, int)
        elif isinstance(default, float) or default is None or default is dataclasses.MISSING:
            out[name] = _num(f"{key}.{name}", raw)
        else:
            out[name] = raw
    return out


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    top: dict[str, str] = {}
    groups: dict[str, dict[str, str]] = {"chain": {}, "modem": {}, "link": {}, "anchor": {}, "run": {}}
    custom: dict[str, dict[str, str]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in _TOP:
            top[key] = value
        elif key.startswith("load."):
            parts = key.split(".")
            if len(parts) != 3 or parts[2] not in _LOAD_FIELDS:
                raise ConfigError(f"{source}:{lineno}: bad load key {key!r}")
            custom.setdefault(parts[1], {})[parts[2]] = value
        elif "." in key and key.split(".", 1)[0] in groups:
            grp, sub = key.split(".", 1)
            groups[grp][sub] = value
        else:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")

    try:
        loads = []
        for name, fields in custom.items():
            base = PRESETS.get(name)
            kw = {} if base is None else dataclasses.asdict(base)
            kw["name"] = name
            kw.update(_coerce(LoadProfile, f"load.{name}", fields))
            if "impedance_re" not in kw:
                raise ConfigError(f"load.{name} needs impedance_re")
            loads.append(LoadProfile(**kw))
        listed = [s.strip() for s in top.get("loads", "").split(",") if s.strip()]
        by_name = {ld.name: ld for ld in loads}
        for name in listed:
            if name not in by_name:
                if name not in PRESETS:
                    raise ConfigError(f"{source}: unresolvable load {name!r}")
                by_name[name] = PRESETS[name]
        ordered = [by_name[n] for n in listed] + [ld for ld in loads if ld.name not in listed]

        chain = ReceiverChain(**_coerce(ReceiverChain, "chain", groups["chain"]))
        modem = ModemConfig(**_coerce(ModemConfig, "modem", groups["modem"]))
        link_fields = dict(groups["link"])
        tx_contrast = link_fields.pop("tx_contrast", None)
        link = LinkBudget(**_coerce(LinkBudget, "link", link_fields)) if link_fields else None
        for k in groups["anchor"]:
            if k not in _ANCHOR_FIELDS:
                raise ConfigError(f"unknown key anchor.{k}")
        anchor = {k: _num(f"anchor.{k}", v) for k, v in groups["anchor"].items()}
        return Scenario(
            name=top.get("name", Path(source).stem),
            loads=ordered,
            chain=chain,
            modem=modem,
            link=link,
            tx_contrast=None if tx_contrast is None else _num("link.tx_contrast", tx_contrast),
            anchor=anchor,
            trials=_num("trials", top.get("trials", "100"), int),
            seed=_num("seed", top.get("seed", "0"), int),
            outputs=top.get("outputs", "out"),
            variance_source=top.get("variance_source", "measured"),
            params=groups["run"],
        )
    except (DomainError, TypeError) as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_scenario(path_or_preset: str) -> Scenario:
    """Read a scenario from a file path, or a shipped preset by name."""
    p = Path(path_or_preset)
    if p.is_file():
        return parse_scenario(p.read_text(), str(p))
    pkg = resources.files("noisecomm") / "scenarios" / f"{path_or_preset}.scn"
    if pkg.is_file():
        return parse_scenario(pkg.read_text(), f"{path_or_preset}.scn")
    raise ConfigError(f"no scenario file or preset named {path_or_preset!r}; presets: {', '.join(preset_names())}")


def preset_names() -> list[str]:
    d = resources.files("noisecomm") / "scenarios"
    return sorted(p.name[:-4] for p in d.iterdir() if p.name.endswith(".scn"))
