import configparser
import dataclasses
import functools
import logging
from pathlib import Path
from typing import Any, Optional

from netanomaly.errors import ConfigError

logger = logging.getLogger(__name__)


CONFIG_DIR = Path('~/.config/netanomaly').expanduser()

# keys placed before any section header belong here
GENERAL_SECTION = 'netanomaly'


@functools.cache
def get_config() -> configparser.ConfigParser:
    config_path = CONFIG_DIR / 'config.ini'
    config = configparser.ConfigParser(strict=False)
    if config_path.exists():
        logger.info(f'Loading config from {config_path}')
        config.read_string(_with_implicit_section(config_path.read_text()))
    else:
        logger.info(f'No config file found at {config_path}. Using defaults.')
    return config


def _with_implicit_section(text: str) -> str:
    return f'[{GENERAL_SECTION}]\n' + text


def read_run_config(path: Path) -> configparser.ConfigParser:
    """Read a `key = value` run configuration (sections optional)."""
    config = configparser.ConfigParser(strict=False)
    try:
        config.read_string(_with_implicit_section(path.read_text()), source=str(path))
    except (OSError, configparser.Error) as e:
        raise ConfigError(f'cannot read config file {path}: {e}') from e
    logger.info(f'Loaded run config from {path}')
    return config


def _section_values(config: configparser.ConfigParser, subcommand: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for section in (GENERAL_SECTION, subcommand):
        if config.has_section(section):
            for key, value in config.items(section, raw=True):
                values[key.replace('-', '_')] = value
    return values


def parameter_defaults(subcommand: str, run_config: Optional[Path] = None) -> dict[str, str]:
    """Defaults for the options of `subcommand`.

    The user config is overridden by the run config; flags given on the
    command line override both (they are handed to click as a default map).
    """
    values = _section_values(get_config(), subcommand)
    if run_config is not None:
        values.update(_section_values(read_run_config(run_config), subcommand))
    return values


@dataclasses.dataclass(frozen=True)
class RunConfig:
    subcommand: str
    inputs: tuple[Path, ...]
    params: dict[str, Any]
    seed: int
    out: Optional[Path] = None

    def __post_init__(self):
        for path in self.inputs:
            if not path.exists():
                raise ConfigError(f'input file {path} does not exist')
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f'seed must be a 64-bit unsigned integer, got {self.seed}')
