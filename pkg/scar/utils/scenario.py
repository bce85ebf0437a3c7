# utils/scenario.py
import io
import logging
from dataclasses import replace
from pathlib import Path

from django.conf import settings
from rest_framework.exceptions import ParseError
from rest_framework.parsers import JSONParser
from rest_framework.renderers import JSONRenderer

from ..serializers import FleetStateSerializer, ScenarioSerializer
from .exceptions import ScenarioError, flatten_errors

logger = logging.getLogger(__name__)


def _parse_json(text):
    if isinstance(text, str):
        text = text.encode("utf-8")
    try:
        return JSONParser().parse(io.BytesIO(text))
    except ParseError as exc:
        raise ScenarioError(f"Malformed document: {exc.detail}")


def parse_config(data):
    """Validates an already-decoded scenario document."""
    if not isinstance(data, dict):
        raise ScenarioError("Scenario document must be an object")
    serializer = ScenarioSerializer(data=data)
    if not serializer.is_valid():
        raise ScenarioError("Invalid scenario", flatten_errors(serializer.errors))
    config = serializer.save()
    logger.debug("Loaded scenario with %d users", config.n)
    return config


def load_config(text):
    """
    Parses and validates a scenario document (JSON text, schema in
    QUICK_REFERENCE.md). Weights are normalized to sum to one; omitted
    weights mean equal priorities.
    """
    return parse_config(_parse_json(text))


def read_config(path):
    path = Path(path)
    try:
        text = path.read_bytes()
    except OSError as exc:
        raise ScenarioError(f"Cannot read scenario {path}: {exc.strerror}")
    return load_config(text)


def default_config():
    return read_config(settings.SCAR["DEFAULT_SCENARIO"])


def dump_config(config) -> str:
    return JSONRenderer().render(ScenarioSerializer(config).data).decode("utf-8")


def with_users(config, n):
    """First `n` users of the scenario, weights renormalized."""
    if not 1 <= n <= config.n:
        raise ScenarioError(f"Scenario has {config.n} users; cannot keep {n}")
    users = config.users[:n]
    total = sum(user.weight for user in users)
    if total <= 0:
        users = tuple(replace(user, weight=1.0 / n) for user in users)
    else:
        users = tuple(replace(user, weight=user.weight / total) for user in users)
    return replace(config, users=users)


def parse_state(data, config):
    if not isinstance(data, dict):
        raise ScenarioError("Fleet state document must be an object")
    serializer = FleetStateSerializer(data=data, context={"config": config})
    if not serializer.is_valid():
        raise ScenarioError("Invalid fleet state", flatten_errors(serializer.errors))
    return serializer.save()


def load_state(text, config):
    return parse_state(_parse_json(text), config)
