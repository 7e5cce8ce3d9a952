import time
from functools import wraps
from pathlib import Path
from typing import Callable, Any, Optional
import requests
from huggingface_hub.utils import HfHubHTTPError, LocalEntryNotFoundError
from concurrent.futures import TimeoutError
import logging

logger = logging.getLogger(__name__)

class RetryConfig:
    """Configuration for retry behavior"""
    def __init__(
        self,
        max_retries: int = 3,
        initial_delay: float = 1.0,
        max_delay: float = 10.0,
        backoff_factor: float = 2.0
    ):
        self.max_retries = max_retries
        self.initial_delay = initial_delay
        self.max_delay = max_delay
        self.backoff_factor = backoff_factor

# Failures worth retrying: network hiccups while talking to the model hub
TRANSIENT_ERRORS = (TimeoutError, ConnectionError, requests.exceptions.RequestException)

# transformers surfaces failed or partial downloads as OSError
HUB_ERRORS = TRANSIENT_ERRORS + (OSError, HfHubHTTPError, LocalEntryNotFoundError)

def with_retry(
    max_retries: int = 3,
    initial_delay: float = 1.0,
    max_delay: float = 10.0,
    backoff_factor: float = 2.0,
    retry_on: tuple = TRANSIENT_ERRORS
):
    """
    Decorator for adding retry logic with exponential backoff to functions.

    Args:
        max_retries: Maximum number of retry attempts
        initial_delay: Initial delay between retries in seconds
        max_delay: Maximum delay between retries in seconds
        backoff_factor: Factor to multiply delay by after each retry
        retry_on: Exception types that trigger another attempt
    """
    config = RetryConfig(max_retries, initial_delay, max_delay, backoff_factor)

    def decorator(func: Callable) -> Callable:
        @wraps(func)
        def wrapper(*args, **kwargs) -> Any:
            last_exception = None
            delay = config.initial_delay

            for attempt in range(config.max_retries + 1):
                try:
                    return func(*args, **kwargs)
                except retry_on as e:
                    last_exception = e
                    if attempt == config.max_retries:
                        logger.error(f"{func.__qualname__}: all {config.max_retries + 1} attempts failed. "
                                     f"Last error: {str(e)}")
                        break

                    logger.warning(f"{func.__qualname__}: attempt {attempt + 1}/{config.max_retries + 1} failed: {str(e)}")
                    logger.info(f"Retrying in {delay:.2f} seconds...")

                    time.sleep(delay)
                    delay = min(delay * config.backoff_factor, config.max_delay)

            raise last_exception

        return wrapper
    return decorator

@with_retry(max_retries=5, initial_delay=2.0, max_delay=60.0, retry_on=HUB_ERRORS)
def _download(load: Callable, identifier: str, **kwargs):
    return load(identifier, **kwargs)

def from_pretrained(load: Callable, identifier: str, **kwargs):
    """Call a from_pretrained loader, retrying only when the identifier is not a local directory"""
    if Path(str(identifier)).is_dir():
        return load(identifier, **kwargs)
    return _download(load, identifier, **kwargs)

class HubRetry:
    """Utility class for model-hub downloads with retry logic"""

    @staticmethod
    def load_tokenizer(identifier: str, cache_dir: Optional[str] = None, **kwargs):
        """Load a tokenizer from a hub identifier or local directory"""
        from transformers import AutoTokenizer
        logger.info(f"Loading tokenizer {identifier}")
        return from_pretrained(AutoTokenizer.from_pretrained, identifier, cache_dir=cache_dir, **kwargs)

    @staticmethod
    def load_encoder(identifier: str, cache_dir: Optional[str] = None, **kwargs):
        """Load a bare encoder (no task head) for sentence embeddings"""
        from transformers import AutoModel
        logger.info(f"Loading encoder {identifier}")
        return from_pretrained(AutoModel.from_pretrained, identifier, cache_dir=cache_dir, **kwargs)

    @staticmethod
    def load_classifier(identifier: str, cache_dir: Optional[str] = None, **kwargs):
        """Load an encoder with a sequence-classification head"""
        from transformers import AutoModelForSequenceClassification
        logger.info(f"Loading sequence classifier {identifier}")
        return from_pretrained(AutoModelForSequenceClassification.from_pretrained, identifier,
                               cache_dir=cache_dir, **kwargs)
