"""Engine configuration: TOML file plus GRIDIRON_* environment overrides."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter version
    import tomli as tomllib

ENV_PREFIX = "GRIDIRON_"

DEFAULT_VERDICT_METRICS = {
    "QB": ["passing_composite", "qb_accuracy", "qb_decision_making", "qb_iq", "twar"],
}
DEFAULT_ROSTER_POSITIONS = [
    "QB", "RB", "WR", "TE", "OT", "IOL", "EDGE", "DT", "ILB", "OB-LB",
]
DEFAULT_TEAM_OFFENSE_METRICS = [
    "team_passing_composite", "team_rushing_composite", "run_blocking",
]
DEFAULT_TEAM_DEFENSE_METRICS = ["pass_coverage", "rush_defense"]
# Offense metric -> the defense metric it stresses; only these pairings are defined.
DEFAULT_MISMATCH_PAIRS = [
    ["team_passing_composite", "pass_coverage"],
    ["team_rushing_composite", "rush_defense"],
]


@dataclass
class EngineConfig:
    fixtures_dir: str = "fixtures"
    state_dir: str = ".state"
    season: int = 2024
    week: int = 10
    media_base_url: str = "https://media.example.com"
    generator: str = "template"  # template | external
    generator_endpoint: Optional[str] = None
    node_timeout_s: float = 10.0
    parallelism: bool = True
    trace_retention: int = 1000
    strict_fields: bool = False
    context_k: int = 3
    cap_horizon_past: int = 1
    cap_horizon_future: int = 3
    thumbs_down_weight: float = 2.0
    verdict_metrics: dict = field(default_factory=lambda: dict(DEFAULT_VERDICT_METRICS))
    roster_positions: list = field(default_factory=lambda: list(DEFAULT_ROSTER_POSITIONS))
    roster_metric: str = "twar"
    team_offense_metrics: list = field(
        default_factory=lambda: list(DEFAULT_TEAM_OFFENSE_METRICS)
    )
    team_defense_metrics: list = field(
        default_factory=lambda: list(DEFAULT_TEAM_DEFENSE_METRICS)
    )
    mismatch_pairs: list = field(default_factory=lambda: [list(p) for p in DEFAULT_MISMATCH_PAIRS])
    grammar_path: Optional[str] = None
    lexicon_path: Optional[str] = None

    @property
    def media_url_template(self) -> str:
        return self.media_base_url.rstrip("/") + "/plays/{play_id}"


_ENV_FIELDS = {
    "FIXTURES_DIR": ("fixtures_dir", str),
    "STATE_DIR": ("state_dir", str),
    "SEASON": ("season", int),
    "WEEK": ("week", int),
    "MEDIA_BASE_URL": ("media_base_url", str),
    "GENERATOR": ("generator", str),
    "GENERATOR_ENDPOINT": ("generator_endpoint", str),
    "NODE_TIMEOUT_S": ("node_timeout_s", float),
    "PARALLELISM": ("parallelism", lambda v: v.lower() in ("1", "true", "yes", "on")),
    "TRACE_RETENTION": ("trace_retention", int),
}


def load_config(path: Optional[str | Path] = None, env: Optional[dict] = None) -> EngineConfig:
    config = EngineConfig()
    if path is not None:
        with open(path, "rb") as handle:
            data = tomllib.load(handle)
        known = {f for f in config.__dataclass_fields__}
        overrides = {k: v for k, v in data.items() if k in known}
        config = replace(config, **overrides)
    env = os.environ if env is None else env
    for suffix, (field_name, cast) in _ENV_FIELDS.items():
        raw = env.get(ENV_PREFIX + suffix)
        if raw is not None:
            config = replace(config, **{field_name: cast(raw)})
    return config
