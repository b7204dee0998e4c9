"""Application configuration: the dignite.conf JSON document."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigMissingError, InvalidParameterError, ProtocolViolationError
from .transport import ProxyConfig

DEFAULT_CONFIG_FILENAME = "dignite.conf"
CONFIG_ENV_VAR = "TRACEFORGE_CONFIG"


@dataclass
class AppConfig:
    check_connection_url: str
    google_safe_browsing_key: str = ""
    proxy: ProxyConfig = ProxyConfig()


def validate_config(config: AppConfig) -> AppConfig:
    """UC2 parameter verification."""
    if not config.check_connection_url:
        raise ConfigMissingError("checkConnectionURL is required")
    if config.proxy.host and not 1 <= config.proxy.port <= 65535:
        raise InvalidParameterError(
            f"proxy host {config.proxy.host!r} needs a port in [1, 65535], got {config.proxy.port}"
        )
    return config


def parse_config(text: str) -> AppConfig:
    """Strict JSON with keys checkConnectionURL, googleSafeBrowsingKey and
    proxy{host,port}; the optional keys default to empty/direct."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ProtocolViolationError(f"configuration is not valid JSON: {err}") from err
    if not isinstance(data, dict):
        raise ProtocolViolationError("configuration must be a JSON object")
    url = data.get("checkConnectionURL")
    if not url or not isinstance(url, str):
        raise ConfigMissingError("checkConnectionURL missing from configuration")
    proxy_data = data.get("proxy") or {}
    if not isinstance(proxy_data, dict):
        raise ProtocolViolationError("proxy must be an object with host and port")
    proxy = ProxyConfig(host=str(proxy_data.get("host", "") or ""),
                        port=int(proxy_data.get("port", 0) or 0))
    config = AppConfig(
        check_connection_url=url,
        google_safe_browsing_key=str(data.get("googleSafeBrowsingKey", "") or ""),
        proxy=proxy,
    )
    return validate_config(config)


def load_config(path: str | Path) -> AppConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigMissingError(f"configuration file not found: {path}")
    return parse_config(path.read_text(encoding="utf-8"))


def find_config_path(explicit: str | None = None) -> Path:
    """Resolution order: explicit flag, TRACEFORGE_CONFIG, ./dignite.conf."""
    if explicit:
        return Path(explicit)
    env_path = os.environ.get(CONFIG_ENV_VAR)
    if env_path:
        return Path(env_path)
    return Path(DEFAULT_CONFIG_FILENAME)


def config_to_dict(config: AppConfig) -> dict:
    return {
        "checkConnectionURL": config.check_connection_url,
        "googleSafeBrowsingKey": config.google_safe_browsing_key,
        "proxy": {"host": config.proxy.host, "port": config.proxy.port},
    }
