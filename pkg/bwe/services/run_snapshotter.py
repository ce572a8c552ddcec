import configparser
import hashlib
import json
import logging
import re
from pathlib import Path
from typing import Tuple, Union

from bwe.core.config import lock_path, settings
from bwe.core.exceptions import ConfigError
from bwe.core.observability import ExecutionTracer
from bwe.schemas.run import RunConfig
from bwe.schemas.traces import RunSnapshot

logger = logging.getLogger(__name__)

_FINGERPRINT_LINE = re.compile(r"^# fingerprint: sha256 ([0-9a-f]{64})$", re.MULTILINE)


class RunSnapshotter:
    """
    Freezes the effective configuration of a run next to its outputs.
    The fingerprint covers the config text only, so identical configs give
    identical run.lock files.
    """

    SNAPSHOT_VERSION = "1.0"

    @staticmethod
    def calculate_hash(text: str) -> str:
        """Computes a SHA-256 hash for a segment of text."""
        if not text:
            return ""
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    @classmethod
    def create_run_snapshot(cls, command: str, config: RunConfig) -> RunSnapshot:
        return RunSnapshot(
            snapshot_version=cls.SNAPSHOT_VERSION,
            command=command,
            engine={"name": settings.PROJECT_NAME, "version": settings.ENGINE_VERSION},
            config=config.model_dump(mode="json", exclude_none=True),
            fingerprint=cls.calculate_hash(config.to_lock_text()),
        )

    @classmethod
    def write_lock(cls, output_dir: Union[str, Path], command: str, config: RunConfig) -> Path:
        snapshot = cls.create_run_snapshot(command, config)
        path = lock_path(str(output_dir))
        path.parent.mkdir(parents=True, exist_ok=True)
        header = (
            f"# command: {snapshot.command}\n"
            f"# engine: {snapshot.engine['name']} {snapshot.engine['version']}\n"
            f"# fingerprint: sha256 {snapshot.fingerprint}\n"
        )
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(header + config.to_lock_text())
        logger.info(f"Wrote {path} (fingerprint {snapshot.fingerprint[:16]})")
        return path

    @classmethod
    def read_lock(cls, path: Union[str, Path]) -> Tuple[RunConfig, str]:
        text = Path(path).read_text(encoding="utf-8")
        match = _FINGERPRINT_LINE.search(text)
        if match is None:
            raise ConfigError(f"{path} carries no fingerprint")
        try:
            config = RunConfig.from_lock_text(text)
        except (ValueError, configparser.Error) as e:
            raise ConfigError(f"{path} does not hold a valid run configuration: {e}") from e
        return config, match.group(1)

    @classmethod
    def verify_integrity(cls, path: Union[str, Path]) -> bool:
        """Re-derives the fingerprint from the stored config and compares it."""
        try:
            config, stored = cls.read_lock(path)
        except (OSError, ConfigError) as e:
            logger.warning(f"Cannot verify {path}: {e}")
            return False
        return cls.calculate_hash(config.to_lock_text()) == stored

    @staticmethod
    def write_trace(output_dir: Union[str, Path], tracer: ExecutionTracer) -> Path:
        path = Path(output_dir) / "trace.json"
        with open(path, "w", encoding="utf-8") as f:
            json.dump(tracer.get_full_trace(), f, indent=2, sort_keys=True)
        return path
