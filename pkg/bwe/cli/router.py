import argparse

from bwe.cli.commands import degrade, evaluate, extend, features, train
from bwe.core.config import settings

COMMANDS = (degrade, extend, train, evaluate, features)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bwe", description=f"{settings.PROJECT_NAME} {settings.ENGINE_VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser
