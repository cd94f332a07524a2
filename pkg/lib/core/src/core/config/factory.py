# region Docstring
"""
core.config.factory
Settings base class with YAML support and a cached settings factory.
Overview:
- FactoryBaseSettings layers init kwargs, environment variables, .env values and
    YAML files into a single pydantic-settings model.
- get_settings caches process-wide settings objects.
Contents:
- Classes:
    - CommaListEnvSource:
        Env source that reads list fields from JSON or comma-separated text.
    - FactoryBaseSettings:
        Configuration Priority (highest to lowest):
            1. Init kwargs (CLI flags, scenario file overrides)
            2. Environment variables
            3. .env file values
            4. YAML files (config.{env}.yaml, then config.yaml)
            5. Field defaults
- Functions:
    - get_settings(settings_cls) -> settings_cls:
        LRU-cached factory for settings that are read once per process.
    - build_settings(settings_cls, overrides) -> settings_cls:
        Uncached construction that drops None overrides and converts
        validation failures into ConfigurationError.
Design notes:
- Init kwargs sit above the environment so an explicit CLI flag always wins.
- Extra keys are ignored so one config.yaml can feed every settings class.
"""

# endregion
# region Imports
import json
from functools import lru_cache
from typing import Any, Mapping, Optional, Type, TypeVar

from pydantic import ValidationError
from pydantic.fields import FieldInfo
from pydantic_settings import (
    BaseSettings,
    EnvSettingsSource,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
    YamlConfigSettingsSource,
)

from core.errors import ConfigurationError

from .base import APP_ENV, APP_ROOT

# endregion
# region FactoryBaseSettings Class
T = TypeVar("T", bound=BaseSettings)


class CommaListEnvSource(EnvSettingsSource):
    """Env source that also accepts comma-separated lists."""

    def decode_complex_value(
        self, field_name: str, field: FieldInfo, value: Any
    ) -> Any:
        """
        Accept list values written either as JSON ('[5, 10]') or as
        comma-separated text ('5,10') in env vars.
        """
        if isinstance(value, str):
            try:
                return json.loads(value)
            except json.JSONDecodeError:
                return [part.strip() for part in value.split(",") if part.strip()]
        return value


class FactoryBaseSettings(BaseSettings):
    """
    BaseSettings that reads init kwargs, env vars, .env and YAML.
    Priority: Init > Env Vars > .env > YAML (Env specific) > YAML (Default) > Defaults
    """

    model_config = SettingsConfigDict(
        env_file=APP_ROOT / ".env",
        env_file_encoding="utf-8",
        extra="ignore",
        populate_by_name=True,
        validate_default=True,
    )

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        yaml_settings = YamlConfigSettingsSource(
            settings_cls,
            yaml_file=[APP_ROOT / "config.yaml", APP_ROOT / f"config.{APP_ENV}.yaml"],
        )
        return (
            init_settings,
            CommaListEnvSource(settings_cls),
            dotenv_settings,
            yaml_settings,
        )


# endregion
# region Factory Functions


@lru_cache
def get_settings(settings_cls: Type[T]) -> T:
    """
    Load a settings class once per process; later calls return the cached
    instance.
    """
    return settings_cls()


def build_settings(
    settings_cls: Type[T], overrides: Optional[Mapping[str, Any]] = None
) -> T:
    """
    Construct a settings object with explicit overrides.

    Args:
        settings_cls: The settings class to build.
        overrides: Field values by field name; None values are skipped so
            unset CLI flags fall through to env/YAML/defaults.

    Raises:
        ConfigurationError: When a value violates a field constraint. The
            message names the offending field.
    """
    kwargs = {k: v for k, v in (overrides or {}).items() if v is not None}
    try:
        return settings_cls(**kwargs)
    except ValidationError as e:
        first = e.errors()[0]
        aliases = {
            info.alias: name
            for name, info in settings_cls.model_fields.items()
            if info.alias
        }
        loc = [str(aliases.get(part, part)) for part in first.get("loc", ())]
        field = ".".join(loc) or "?"
        raise ConfigurationError(
            f"{settings_cls.__name__}: invalid value for '{field}': {first['msg']}"
        ) from e


# endregion
