from rest_framework.views import exception_handler
from rest_framework.response import Response
from rest_framework import status


class ScarError(Exception):
    """Base class for every engine error."""


class ScenarioError(ScarError):
    """
    Scenario or fleet-state document failed to parse or validate.
    `fields` maps a dotted field path (e.g. "users[2].capacity") to messages.
    """

    def __init__(self, message, fields=None):
        self.fields = fields or {}
        if self.fields:
            details = "; ".join(
                f"{path}: {' '.join(msgs)}" for path, msgs in self.fields.items()
            )
            message = f"{message} ({details})"
        super().__init__(message)


class NetworkError(ScarError):
    """Unknown node or unreachable node pair."""


class PredictionError(ScarError):
    """Schedule cannot be rolled out (invalid task, transfer cannot progress)."""


class ObjectiveError(ScarError):
    """Cost cannot be computed (dimension mismatch, zero schedule time)."""


class SearchError(ScarError):
    """Invalid horizon or enumeration guard exceeded."""


class SimulationError(ScarError):
    """An invariant checked inline during a simulation run was violated."""


class ExperimentError(ScarError):
    """Invalid experiment plan or unwritable results."""


class ExperimentInterrupted(ScarError):
    """Sweep stopped early; `results` holds the runs finished so far."""

    def __init__(self, results):
        self.results = results
        super().__init__(f"Interrupted after {len(results.rows)} runs")


def flatten_errors(errors, prefix=""):
    """
    Turns nested DRF serializer errors into {"users[2].capacity": [...]}.
    """
    flat = {}
    if isinstance(errors, dict):
        for key, value in errors.items():
            if isinstance(key, int) or str(key).isdigit():
                # list items keyed by index
                path = f"{prefix}[{key}]"
            else:
                path = f"{prefix}.{key}" if prefix else str(key)
            flat.update(flatten_errors(value, path))
    elif isinstance(errors, list):
        if all(isinstance(item, str) for item in errors):
            if errors:
                flat[prefix or "non_field_errors"] = [str(item) for item in errors]
        else:
            for index, item in enumerate(errors):
                flat.update(flatten_errors(item, f"{prefix}[{index}]"))
    elif errors:
        flat[prefix or "non_field_errors"] = [str(errors)]
    return flat


def custom_exception_handler(exc, context):
    # Get default error response
    response = exception_handler(exc, context)

    if response is not None:
        # Normalize DRF default errors
        detail = response.data.get('detail', None) if isinstance(response.data, dict) else None
        message = detail if detail else response.data
        response.data = {
            'error': True,
            'message': message,
            'status_code': response.status_code
        }
        return response

    if isinstance(exc, ScarError):
        body = {
            'error': True,
            'message': str(exc),
            'status_code': status.HTTP_400_BAD_REQUEST
        }
        if isinstance(exc, ScenarioError) and exc.fields:
            body['fields'] = exc.fields
        return Response(body, status=status.HTTP_400_BAD_REQUEST)

    # Anything else is an engine bug
    return Response({
        'error': True,
        'message': str(exc) or "An unexpected error occurred.",
        'status_code': status.HTTP_500_INTERNAL_SERVER_ERROR
    }, status=status.HTTP_500_INTERNAL_SERVER_ERROR)
