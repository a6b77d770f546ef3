import json
import logging
import os
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import pandas as pd

from erspin import __version__
from erspin.integration.run_config import RunConfig

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.10g"
MANIFEST_SUFFIX = ".manifest.json"


class OutputWriter:
    """Writes command outputs with a manifest sidecar next to each file."""

    def __init__(self, out_dir: Union[str, Path], command: str, arguments: Dict[str, Any],
                 config: RunConfig, seed: Optional[int] = None):
        self.out_dir = Path(out_dir)
        self.command = command
        self.arguments = {k: v for k, v in sorted(arguments.items())}
        self.config = config
        self.seed = seed
        self.written: List[Path] = []
        os.makedirs(self.out_dir, exist_ok=True)

    def write_frame(self, name: str, frame: pd.DataFrame) -> Path:
        path = self.out_dir / name
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return self._finish(path, rows=len(frame))

    def write_text(self, name: str, text: str) -> Path:
        path = self.out_dir / name
        with open(path, "w", newline="\n") as f:
            f.write(text)
        return self._finish(path)

    def adopt(self, path: Union[str, Path]) -> Path:
        """Adds a manifest to a file written by another writer."""
        return self._finish(Path(path))

    def _finish(self, path: Path, rows: Optional[int] = None) -> Path:
        manifest = {
            "file": path.name,
            "command": self.command,
            "arguments": self.arguments,
            "config_sha256": self.config.sha256(),
            "seed": self.seed,
            "version": __version__,
            "created": datetime.now(timezone.utc).isoformat(),
        }
        with open(path.with_name(path.name + MANIFEST_SUFFIX), "w") as f:
            json.dump(manifest, f, indent=2, default=str)
        self.written.append(path)
        logger.info(f"Output written | command={self.command} | path={path}"
                    + (f" | rows={rows}" if rows is not None else ""))
        return path
