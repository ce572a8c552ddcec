import logging
import sys
from typing import List, Optional

from bwe.cli.router import build_parser
from bwe.core.config import settings
from bwe.core.exceptions import BweError, ConfigError, ContractError, FormatError
from bwe.core.observability import configure_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARTIAL_FAILURE = 1
EXIT_CONFIG_ERROR = 2


def main(argv: Optional[List[str]] = None) -> int:
    """
    Console entry point. Exit codes: 0 success, 1 some utterances failed,
    2 the run was rejected before processing (bad config, contract or input file).
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG_ERROR if e.code else EXIT_OK

    configure_logging(args.log_level or settings.LOG_LEVEL)
    try:
        return args.handler(args)
    except (ConfigError, ContractError, FormatError, FileNotFoundError) as e:
        logger.error(f"{args.command}: {str(e)}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except (BweError, OSError) as e:
        logger.error(f"{args.command} failed: {str(e)}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARTIAL_FAILURE


if __name__ == "__main__":
    sys.exit(main())
