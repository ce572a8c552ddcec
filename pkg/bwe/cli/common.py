import argparse
from typing import Iterable

from bwe.core.config import resolve_run_config
from bwe.core.exceptions import ConfigError
from bwe.schemas.records import ExciterVariant, LtvMode, PipelineVariant
from bwe.schemas.run import RunConfig


def common_options() -> argparse.ArgumentParser:
    """Options every subcommand accepts."""
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="Config file with a [run] section and one section per subcommand")
    parent.add_argument("--workers", type=int, default=None, help="Parallel workers (0 = logical cores)")
    parent.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    return parent


def add_exciter_options(parser: argparse.ArgumentParser):
    parser.add_argument("--exciter", choices=[v.value for v in ExciterVariant], default=None)
    parser.add_argument("--exciter-seed", type=int, default=None)
    parser.add_argument("--flat-level", type=float, default=None, help="Fixed upper-band level for the noise exciter")
    parser.add_argument("--ltv-mode", choices=[m.value for m in LtvMode], default=None)
    parser.add_argument("--gain-ceiling-db", type=float, default=None)
    parser.add_argument("--variant", choices=[v.value for v in PipelineVariant], default=None)


def run_config(args: argparse.Namespace, command: str, keys: Iterable[str]) -> RunConfig:
    """Effective config for `command`: defaults < --config file < BWE_SEED < the flags named in `keys`."""
    overrides = {key: getattr(args, key, None) for key in keys}
    overrides["workers"] = args.workers
    return resolve_run_config(command, args.config, overrides)


def require(config: RunConfig, *fields: str):
    missing = [f for f in fields if getattr(config, f) is None]
    if missing:
        raise ConfigError(f"Missing required setting(s): {', '.join(missing)}")
