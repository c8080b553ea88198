# app/main.py
import logging
import sys

from app.cli.commands import main as run_cli
from app.config import get_settings

settings = get_settings()

logging.basicConfig(
    level=getattr(logging, settings.log_level.upper(), logging.INFO),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)

logger = logging.getLogger(__name__)


def main() -> int:
    logger.debug(f"{settings.app_name} {settings.app_version}")
    return run_cli()


if __name__ == "__main__":
    sys.exit(main())
