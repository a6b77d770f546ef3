import logging
import sys
from typing import Optional, Sequence

from dotenv import load_dotenv
load_dotenv()

from erspin.cli.commands import configure_commands
from erspin.integration.run_config import RuntimeSettings


def main(argv: Optional[Sequence[str]] = None) -> int:
    settings = RuntimeSettings()
    logging.basicConfig(
        level=getattr(logging, settings.log_level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    return configure_commands(settings).run(argv)


if __name__ == '__main__':
    sys.exit(main())
