"""Optional Langfuse tracing of training runs.

One root span per (variant, seed) run, one child span per PPO update. With
no keys configured, or when authentication fails, every span is a no-op.
"""

import logging
import os
from contextlib import contextmanager
from typing import Any, Generator

from harness.settings import get_settings

logger = logging.getLogger(__name__)

_client = None
_client_checked = False


def get_langfuse_client():
    """Langfuse v3 client, or None when tracing is not configured or not reachable."""
    global _client, _client_checked
    if _client_checked:
        return _client
    _client_checked = True

    settings = get_settings()
    if not settings.tracing_configured:
        return None
    try:
        from langfuse import get_client

        if settings.langfuse_host:
            os.environ["LANGFUSE_HOST"] = settings.langfuse_host
            os.environ["LANGFUSE_BASE_URL"] = settings.langfuse_host
        client = get_client()
        if client.auth_check():
            _client = client
            logger.info("Langfuse tracing enabled")
        else:
            logger.warning("Langfuse authentication failed - tracing disabled")
    except Exception as e:
        logger.warning("Langfuse not available: %s", e)
    return _client


class RunTracer:
    """
    Root span for one training run.

    Usage:
        with RunTracer("policy-dbm_value-mlp/seed-0", metadata=...) as tracer:
            with tracer.span("update-3", metadata=stats) as span:
                span.update(output=...)
    """

    def __init__(self, name: str, metadata: dict | None = None, input_data: Any = None, enabled: bool = True):
        self.langfuse = get_langfuse_client() if enabled else None
        self.name = name
        self.metadata = metadata or {}
        self.input_data = input_data
        self._root_span = None
        self._root_ctx = None

    def __enter__(self):
        if self.langfuse:
            try:
                self._root_ctx = self.langfuse.start_as_current_span(
                    name=self.name,
                    input=self.input_data,
                    metadata=self.metadata,
                )
                self._root_span = self._root_ctx.__enter__()
            except Exception as e:
                logger.warning("Failed to start trace: %s", e)
        return self

    def __exit__(self, *args):
        if self._root_ctx:
            try:
                self._root_ctx.__exit__(*args)
            except Exception:
                pass
        self.flush()

    def set_output(self, output: Any):
        if self._root_span:
            try:
                self._root_span.update(output=output)
            except Exception:
                pass

    @contextmanager
    def span(self, name: str = "", input_data: Any = None, metadata: dict | None = None) -> Generator["SpanWrapper", None, None]:
        """Child span inside the run; yields a DummySpan when tracing is off."""
        ctx = None
        if self.langfuse:
            try:
                ctx = self.langfuse.start_as_current_span(name=name, input=input_data, metadata=metadata or {})
            except Exception as e:
                logger.warning("Failed to create span: %s", e)
        if ctx is None:
            yield DummySpan()
            return
        with ctx as span_ctx:
            yield SpanWrapper(span_ctx)

    def flush(self):
        if self.langfuse:
            try:
                self.langfuse.flush()
            except Exception:
                pass


class SpanWrapper:
    """Wrapper for a Langfuse span to provide a consistent interface."""

    def __init__(self, span):
        self._span = span

    def update(self, output: Any = None, **kwargs):
        if self._span:
            try:
                self._span.update(output=output, **kwargs)
            except Exception:
                pass


class DummySpan:
    """No-op span used when tracing is disabled."""

    def update(self, output: Any = None, **kwargs):
        pass
