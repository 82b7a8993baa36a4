"""Born machine laboratory CLI main application."""

import asyncio
import argparse
import sys
import logging
from pathlib import Path

# Add the src directory to the path
current_dir = Path(__file__).parent
src_dir = current_dir.parent
sys.path.insert(0, str(src_dir))

from bornlab.config.logging_config import setup_logging
from bornlab.config.experiment_config import load_experiment_config
from bornlab.config.settings import get_settings
from bornlab.errors import ConfigError
from bornlab.services.experiment_service import ExperimentService

EXIT_CONFIG_ERROR = 1
EXIT_RUNTIME_ERROR = 2


class BornLabCLI:
    """Main CLI application."""

    def __init__(self):
        self.logger = logging.getLogger(__name__)
        self.settings = None

    async def initialize_services(self):
        """Read runtime caps from the environment."""
        self.settings = get_settings()

    async def handle_run(self, args):
        """Handle experiment run command."""
        try:
            config = await load_experiment_config(args.config)
            threads = args.threads or config.threads or self.settings.threads
            service = ExperimentService(self.settings, threads)
            written = await service.run(config, args.out, True if args.svg else None)
            print(f"Experiment '{config.kind}' finished, {len(written)} artifacts:")
            for path in written:
                print(f"  - {path}")
        except ConfigError as e:
            self.logger.error("Configuration failed: %s", str(e))
            sys.exit(EXIT_CONFIG_ERROR)
        except Exception as e:
            self.logger.error("Experiment failed: %s", str(e))
            sys.exit(EXIT_RUNTIME_ERROR)

    async def handle_validate(self, args):
        """Handle config validation command."""
        try:
            config = await load_experiment_config(args.config)
            print(f"Config OK: {config.kind} experiment")
            print(f"  - Tables: {', '.join(sorted(config.tables)) or 'none'}")
            print(f"  - Hash: {config.config_hash()}")
        except ConfigError as e:
            self.logger.error("Validation failed: %s", str(e))
            sys.exit(EXIT_CONFIG_ERROR)

    def create_parser(self):
        """Create argument parser."""
        parser = argparse.ArgumentParser(description="Quantum circuit Born machine laboratory")
        parser.add_argument("--verbose", "-v", action="store_true", help="Enable verbose logging")

        subparsers = parser.add_subparsers(dest="command", help="Available commands")

        run_parser = subparsers.add_parser("run", help="Run an experiment config")
        run_parser.add_argument("config", help="Path to the experiment TOML file")
        run_parser.add_argument("--out", help="Output directory (default: experiment.output_dir)")
        run_parser.add_argument("--threads", type=int, help="Worker threads for grid fan-out")
        run_parser.add_argument("--svg", action="store_true", help="Also render SVG plots")

        validate_parser = subparsers.add_parser("validate", help="Validate an experiment config")
        validate_parser.add_argument("config", help="Path to the experiment TOML file")

        return parser

    async def run(self, args=None):
        """Run the CLI application."""
        parser = self.create_parser()
        parsed_args = parser.parse_args(args)

        if parsed_args.verbose:
            logging.getLogger().setLevel(logging.DEBUG)

        if not parsed_args.command:
            parser.print_help()
            return

        try:
            await self.initialize_services()
        except ConfigError as e:
            self.logger.error("Settings initialization failed: %s", str(e))
            sys.exit(EXIT_CONFIG_ERROR)

        command_handlers = {
            "run": self.handle_run,
            "validate": self.handle_validate,
        }

        handler = command_handlers.get(parsed_args.command)
        if handler:
            await handler(parsed_args)
        else:
            print(f"Unknown command: {parsed_args.command}")
            sys.exit(EXIT_CONFIG_ERROR)


def main():
    """Main entry point for CLI."""
    setup_logging()
    cli = BornLabCLI()
    asyncio.run(cli.run())


if __name__ == "__main__":
    main()
