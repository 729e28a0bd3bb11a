import logging

from fnlw.common.settings import optional_env

_telemetry_configured = False

logger = logging.getLogger(__name__)


def enable_observability(*, connection_string: str | None = None) -> bool:
    """Configure OpenTelemetry export to Application Insights.

    Falls back to `APPLICATIONINSIGHTS_CONNECTION_STRING`. Without a connection
    string the global tracer stays a no-op and spans cost nothing.
    Returns whether export is active.
    """

    global _telemetry_configured
    if _telemetry_configured:
        return True

    connection_string = connection_string or optional_env("APPLICATIONINSIGHTS_CONNECTION_STRING")
    if not connection_string:
        return False

    try:
        from azure.monitor.opentelemetry import configure_azure_monitor

        configure_azure_monitor(connection_string=connection_string)
    except Exception as exc:
        # Export is optional; runs proceed without it.
        logger.warning("Telemetry setup skipped: %s", exc)
        return False

    _telemetry_configured = True
    return True
