"""Scenario configuration, read from and written to TOML."""

from __future__ import annotations

import sys
from pathlib import Path
from typing import Literal, Optional

import tomli_w
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .channel import CqiTable, LinkBudget


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GroupingConfig(_Section):
    scheme: Literal["fixed", "cqi", "random", "unicast"] = "cqi"
    k: int = Field(5, ge=1, description="UEs per group for the fixed-size scheme")
    n_groups: int = Field(10, ge=1, description="label count for the random scheme")


class AllocatorConfig(_Section):
    kind: Literal["greedy", "lp", "sa", "exact"] = "lp"
    sa_iters: int = Field(100_000, ge=1)
    exact_budget: int = Field(1_000_000, ge=1)
    lp_method: Literal["highs", "simplex", "dantzig"] = "highs"


class PfConfig(_Section):
    n_unicast_ues: int = Field(0, ge=0)
    window: float = Field(100.0, gt=1.0, description="exponential averaging window, subframes")
    epsilon: float = Field(1.0, gt=0.0, description="throughput floor in kbps")


class CqiTableConfig(_Section):
    snr_min_linear: list[float]
    rate_kbps: list[float]

    def build(self) -> CqiTable:
        return CqiTable(tuple(self.snr_min_linear), tuple(self.rate_kbps))

    @model_validator(mode="after")
    def _check(self):
        self.build()  # raises ValueError with the offending property
        return self


class ScenarioConfig(_Section):
    n_ues: int = Field(50, ge=1)
    n_prbs: int = Field(100, ge=1)
    r_req_kbps: float = Field(1000.0, gt=0.0)
    cell_radius_km: float = Field(0.375, gt=0.0)
    n_placements: int = Field(100, ge=1)
    n_subframes: int = Field(1000, ge=1)
    seed: int = Field(0, ge=0, lt=2**63)
    tx_power_dbm: float = 46.0
    noise_density_dbm_hz: float = -174.0
    noise_figure_db: float = 5.0
    shadowing_std_db: float = Field(10.0, ge=0.0)
    grouping: GroupingConfig = GroupingConfig()
    allocator: AllocatorConfig = AllocatorConfig()
    pf: PfConfig = PfConfig()
    cqi_table: Optional[CqiTableConfig] = None

    def table(self) -> CqiTable:
        return self.cqi_table.build() if self.cqi_table is not None else CqiTable.default()

    def link_budget(self) -> LinkBudget:
        return LinkBudget(tx_power_dbm=self.tx_power_dbm,
                          noise_density_dbm_hz=self.noise_density_dbm_hz,
                          noise_figure_db=self.noise_figure_db)


class ConfigError(ValueError):
    """Invalid configuration; the message names every offending field."""


def _explain(err: ValidationError) -> str:
    parts = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        parts.append(f"{loc}: {e['msg']}")
    return "; ".join(parts)


def config_from_dict(data: dict) -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as err:
        raise ConfigError(_explain(err)) from None


def loads_config(text: str) -> ScenarioConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"malformed TOML: {err}") from None
    return config_from_dict(data)


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err.strerror}") from None
    try:
        return loads_config(text)
    except ConfigError as err:
        raise ConfigError(f"{path}: {err}") from None


def dumps_config(cfg: ScenarioConfig) -> str:
    return tomli_w.dumps(cfg.model_dump(exclude_none=True))


def with_overrides(cfg: ScenarioConfig, **changes) -> ScenarioConfig:
    """Copy with top-level or ``section__field`` overrides, re-validated."""
    data = cfg.model_dump(exclude_none=True)
    for key, value in changes.items():
        if value is None:
            continue
        if "__" in key:
            section, field = key.split("__", 1)
            data.setdefault(section, {})[field] = value
        else:
            data[key] = value
    return config_from_dict(data)
