"""
Main Application Entry Point for the distributed average tracking simulator.
Configures logging and dispatches command-line subcommands.
"""

import sys
from typing import List, Optional

from loguru import logger

# Local imports
from cli.commands import CommandRouter, build_parser
from config.settings import Config, get_config
from core.errors import DatError


def configure_logging(config: Config) -> None:
    """
    Replace loguru's default sink with the configured stderr and file sinks.

    Args:
        config: Application configuration (level, log directory, JSON switch)
    """
    logger.remove()
    logger.add(sys.stderr, level=config.LOG_LEVEL, serialize=config.LOG_JSON)
    logger.add(
        config.LOGS_DIR / config.LOG_FILE,
        level=config.LOG_LEVEL,
        rotation="10 MB",
        retention="7 days",
        serialize=config.LOG_JSON,
    )


def cli_main(argv: Optional[List[str]] = None, config: Config = None) -> int:
    """
    Command-line entry point.

    Args:
        argv: Arguments without the program name (defaults to sys.argv[1:])
        config: Application configuration (optional)

    Returns:
        0 on success, 1 on a simulator error, 2 on invalid arguments
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    if config is None:
        config = get_config()

    # Validate configuration
    config_errors = config.validate_config()
    if config_errors:
        print(f"Configuration errors: {config_errors}")
        return 1
    configure_logging(config)

    router = CommandRouter(config)
    try:
        return router.dispatch(args)
    except DatError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}")
        return 1


def main():
    """Main application entry point."""
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
