"""Config file handling: flat INI sections [env], [params], [experiment].

Resolution order is built-in defaults < config file < command-line
overrides (``--set section.key=value``).  Unknown sections or keys are
rejected rather than ignored, and the fully resolved configuration can be
echoed back as INI text for provenance.
"""

import configparser
from dataclasses import dataclass, field, fields, replace

from .agents import ALGORITHMS, EpsilonSchedule, HyperParams
from .env import ConfigError, EnvConfig


@dataclass
class ExperimentSettings:
    label: str = "experiment"
    algo: str = "q-learning"
    replications: int = 20
    base_seed: int = 0
    schedules: tuple[EpsilonSchedule, ...] = (
        EpsilonSchedule.decaying(0.1, 0.99),
        EpsilonSchedule.fixed(0.1),
    )

    def validate(self) -> None:
        if self.algo not in ALGORITHMS:
            raise ConfigError(f"experiment.algo must be one of {ALGORITHMS} (got {self.algo!r})")
        if self.replications < 1:
            raise ConfigError(f"experiment.replications must be >= 1 (got {self.replications})")
        for sched in self.schedules:
            sched.validate("experiment.schedules entry")


@dataclass
class ResolvedConfig:
    env: EnvConfig = field(default_factory=EnvConfig)
    params: HyperParams = field(default_factory=HyperParams)
    experiment: ExperimentSettings = field(default_factory=ExperimentSettings)

    def validate(self) -> None:
        self.env.validate()
        self.params.validate()
        self.experiment.validate()


_SECTIONS = {"env": EnvConfig, "params": HyperParams, "experiment": ExperimentSettings}


def _parse_bool(text: str, where: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{where} expects a boolean (got {text!r})")


def _split_top_level(text: str) -> list[str]:
    """Split on commas that are not inside parentheses."""
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    tail = "".join(cur).strip()
    if tail:
        parts.append(tail)
    return [p.strip() for p in parts if p.strip()]


def _coerce(section: str, key: str, text: str, current):
    where = f"{section}.{key}"
    if key == "epsilon_schedule":
        return EpsilonSchedule.parse(text)
    if key == "schedules":
        return tuple(EpsilonSchedule.parse(p) for p in _split_top_level(text))
    kind = type(current)
    try:
        if kind is bool:
            return _parse_bool(text, where)
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        return text.strip()
    except ValueError as exc:
        raise ConfigError(f"{where} expects {kind.__name__} (got {text!r})") from exc


def _apply(resolved: ResolvedConfig, section: str, key: str, text: str) -> ResolvedConfig:
    if section not in _SECTIONS:
        raise ConfigError(
            f"unknown config section {section!r}; expected one of {sorted(_SECTIONS)}"
        )
    target = getattr(resolved, section)
    known = {f.name for f in fields(target)}
    if key not in known:
        raise ConfigError(f"unknown config key {section}.{key}; known keys: {sorted(known)}")
    value = _coerce(section, key, text, getattr(target, key))
    return replace(resolved, **{section: replace(target, **{key: value})})


def load_config(path=None, overrides=()) -> ResolvedConfig:
    """Build a ResolvedConfig from defaults, an optional INI file, and overrides.

    Overrides are ``section.key=value`` strings.  Raises FileNotFoundError
    for a missing file and ConfigError for anything unparsable or unknown.
    """
    resolved = ResolvedConfig()
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            parser = configparser.ConfigParser(interpolation=None)
            try:
                parser.read_file(fh)
            except configparser.Error as exc:
                raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
        for section in parser.sections():
            for key, text in parser.items(section):
                resolved = _apply(resolved, section, key, text)
    for item in overrides:
        dotted, sep, text = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        section, dot, key = dotted.strip().partition(".")
        if not dot:
            raise ConfigError(f"override key {dotted.strip()!r} must look like section.key")
        resolved = _apply(resolved, section, key.strip(), text.strip())
    return resolved


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, EpsilonSchedule):
        return value.spec()
    if isinstance(value, tuple):
        return ", ".join(v.spec() for v in value)
    return str(value)


def to_ini_text(resolved: ResolvedConfig) -> str:
    """Render the fully resolved configuration as INI (deterministic order)."""
    lines = []
    for section in _SECTIONS:
        target = getattr(resolved, section)
        lines.append(f"[{section}]")
        for f in fields(target):
            lines.append(f"{f.name} = {_format_value(getattr(target, f.name))}")
        lines.append("")
    return "\n".join(lines)
