import logging
import sys
from pathlib import Path
from typing import Callable, Tuple

import click

from cli.commands import SPLITS, cmd_evaluate, cmd_predict, cmd_prepare, cmd_train
from config.run_config import load_config
from config.settings import LOG_LEVEL
from utils.errors import ConfigError, PipelineError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _run(action: Callable[[], object]) -> None:
    """Map toolkit errors to exit codes: 2 for configuration, 3 for runtime failures"""
    try:
        action()
    except ConfigError as e:
        logger.error(f"Invalid configuration at {e.field}: {e.message}")
        print(f"❌ {e.field}: {e.message}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)
    except PipelineError as e:
        logger.error(str(e))
        print(f"❌ {str(e)}", file=sys.stderr)
        sys.exit(EXIT_RUNTIME)


config_option = click.option("--config", "config_path", required=True, type=click.Path(path_type=Path),
                             help="TOML run configuration")
set_option = click.option("--set", "overrides", multiple=True, metavar="SECTION.KEY=VALUE",
                          help="Override a configuration key; repeatable")
artifact_option = click.option("--artifact", type=click.Path(path_type=Path), default=None,
                               help="Trained run directory (defaults to the run the config describes)")


@click.group()
@click.option("--log-level", default=LOG_LEVEL, show_default=True, help="Root logging level")
def cli(log_level: str) -> None:
    """Abusive-comment detection runs: prepare, train, evaluate, predict."""
    logging.basicConfig(
        level=getattr(logging, log_level.upper(), logging.INFO),
        format='%(asctime)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )


@cli.command()
@config_option
@set_option
def prepare(config_path: Path, overrides: Tuple[str, ...]) -> None:
    """Clean the dataset splits and write the class distribution report."""
    _run(lambda: cmd_prepare(load_config(config_path, overrides)))


@cli.command()
@config_option
@set_option
def train(config_path: Path, overrides: Tuple[str, ...]) -> None:
    """Train the configured model on the prepared splits."""
    _run(lambda: cmd_train(load_config(config_path, overrides)))


@cli.command()
@config_option
@set_option
@artifact_option
@click.option("--split", type=click.Choice(SPLITS), default="test", show_default=True)
def evaluate(config_path: Path, overrides: Tuple[str, ...], artifact: Path, split: str) -> None:
    """Score a trained run on a prepared split and update the results grid."""
    _run(lambda: cmd_evaluate(load_config(config_path, overrides), artifact, split))


@cli.command()
@config_option
@set_option
@artifact_option
@click.option("--input", "input_path", required=True, type=click.Path(path_type=Path),
              help="Unlabeled TSV, comment text in the first column; blank lines are skipped")
@click.option("--output", "output_path", required=True, type=click.Path(path_type=Path),
              help="Where to write text<TAB>predicted_label rows")
def predict(config_path: Path, overrides: Tuple[str, ...], artifact: Path, input_path: Path,
            output_path: Path) -> None:
    """Label the comments of an unlabeled file."""
    _run(lambda: cmd_predict(load_config(config_path, overrides), input_path, output_path, artifact))


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
