"""
Text completion clients: text in, text out.

All clients record the prompts they receive in `prompts`, which makes them usable as
instrumented mocks.
"""
import os
import re
import json
import time
import typing
import logging
import pathlib
import threading

import attr
import requests

from .. import config
from .prompts import FIELDS_MARKER, CONTEXT_MARKER

__all__ = [
    'DEFAULT_API_KEY_ENV', 'ClientError', 'RateLimiter', 'Client', 'EmptyClient', 'EchoClient',
    'ScriptedClient', 'LiveClient', 'get_client']

DEFAULT_API_KEY_ENV = 'PTMCHAIN_API_KEY'

KEY_VALUE = re.compile(r'\s*(?:[-*]\s+)?\**(?P<key>[A-Za-z][\w -]*?)\**\s*:\s*(?P<value>\S.*)$')

log = logging.getLogger('ptmchain')


class ClientError(RuntimeError):
    pass


class RateLimiter(object):
    """
    Enforce a minimal interval between requests, across threads.
    """

    def __init__(self, per_second: typing.Optional[float] = None, clock=time.monotonic,
                 sleep=time.sleep):
        self.interval = 1.0 / per_second if per_second else 0.0
        self._clock, self._sleep = clock, sleep
        self._lock = threading.Lock()
        self._next = None

    def wait(self):
        if not self.interval:
            return
        with self._lock:
            now = self._clock()
            if self._next is not None and now < self._next:
                self._sleep(self._next - now)
                now = self._next
            self._next = now + self.interval


@attr.s
class Client(object):
    client_id = None

    model_id = attr.ib(default='mock')
    temperature = attr.ib(default=0)
    timeout = attr.ib(default=60)
    max_retries = attr.ib(default=2)
    rate_limiter = attr.ib(default=attr.Factory(RateLimiter), repr=False)
    prompts = attr.ib(default=attr.Factory(list), repr=False)

    @property
    def id(self):
        return '{0}:{1}'.format(self.client_id, self.model_id)

    def complete(self, prompt: str) -> str:
        """
        :raises ClientError: if no completion could be obtained.
        """
        self.rate_limiter.wait()
        self.prompts.append(prompt)
        return self._complete(prompt)

    def _complete(self, prompt: str) -> str:
        raise NotImplementedError()  # pragma: no cover


@attr.s
class EmptyClient(Client):
    """Always answers with an empty object."""
    client_id = 'empty'

    def _complete(self, prompt):
        return '{}'


def requested_fields(prompt: str) -> typing.List[str]:
    m = re.search(
        r'^{0}\n(?P<fields>.*?)(?:\n\n{1}|\Z)'.format(
            re.escape(FIELDS_MARKER), re.escape(CONTEXT_MARKER)),
        prompt,
        flags=re.MULTILINE | re.DOTALL)
    return [f.strip() for f in m.group('fields').splitlines() if f.strip()] if m else []


def context(prompt: str) -> str:
    _, sep, res = prompt.partition('\n{0}\n'.format(CONTEXT_MARKER))
    return res if sep else ''


@attr.s
class EchoClient(Client):
    """
    Answers with the `key: value` lines of the prompt context whose key is a requested field.
    """
    client_id = 'echo'

    def _complete(self, prompt):
        kinds = {k: f.kind for k, f in config.load('metadata_fields').items()}
        fields = set(requested_fields(prompt))
        res = {}
        for line in context(prompt).splitlines():
            m = KEY_VALUE.match(line)
            if not m:
                continue
            key = re.sub(r'[\s-]+', '_', m.group('key').strip().lower())
            if key in fields and key not in res and kinds.get(key) not in {'map', 'pairs'}:
                value = m.group('value').strip()
                if kinds[key] == 'list':
                    value = [v.strip() for v in value.split(',') if v.strip()]
                res[key] = value
        return json.dumps(res, sort_keys=True)


@attr.s
class ScriptedClient(Client):
    """
    Answers according to a script of rules.

    A rule is a dict with keys `match` (a string or a list of strings which must all occur in
    the prompt) and `response` (text or JSON object). The first matching rule wins; prompts not
    matched by any rule are answered with `default`.
    """
    client_id = 'scripted'

    rules = attr.ib(default=attr.Factory(list))
    default = attr.ib(default='{}')

    @classmethod
    def from_file(cls, fname, **kw):
        script = json.loads(pathlib.Path(fname).read_text(encoding='utf-8'))
        if isinstance(script, list):
            script = {'rules': script}
        return cls(rules=script.get('rules', []), default=script.get('default', '{}'), **kw)

    def _complete(self, prompt):
        for rule in self.rules:
            match = rule['match']
            if all(m in prompt for m in ([match] if isinstance(match, str) else match)):
                response = rule['response']
                if isinstance(response, str):
                    return response
                return json.dumps(response, sort_keys=True)
        return self.default if isinstance(self.default, str) else json.dumps(self.default)


@attr.s
class LiveClient(Client):
    """
    Client for an OpenAI-style chat completions endpoint.
    """
    client_id = 'live'

    endpoint = attr.ib(default=None)
    api_key = attr.ib(default=None, repr=False)
    session = attr.ib(default=None, repr=False)

    def __attrs_post_init__(self):
        if not self.endpoint:
            raise ValueError('live client requires an endpoint')
        if not self.model_id or self.model_id == 'mock':
            raise ValueError('live client requires a model id')
        if self.session is None:
            # Retries are left to the caller, see `ptmchain.cards.pipeline`.
            self.session = requests.Session()

    def _complete(self, prompt):
        headers = {'Content-Type': 'application/json'}
        if self.api_key:
            headers['Authorization'] = 'Bearer {0}'.format(self.api_key)
        try:
            res = self.session.post(
                self.endpoint,
                json={
                    'model': self.model_id,
                    'temperature': self.temperature,
                    'messages': [{'role': 'user', 'content': prompt}],
                },
                headers=headers,
                timeout=self.timeout)
            res.raise_for_status()
        except requests.RequestException as e:
            raise ClientError('request to {0} failed: {1}'.format(self.endpoint, e)) from e
        try:
            return res.json()['choices'][0]['message']['content']
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise ClientError('unexpected response from {0}: {1}'.format(self.endpoint, e)) from e


def get_client(name: str,
               script=None,
               endpoint=None,
               model_id=None,
               api_key_env=DEFAULT_API_KEY_ENV,
               rate_limit=None,
               timeout=60,
               retries=2) -> Client:
    """
    Client factory for the command line.

    `mock` selects the scripted client if a script is given, the echo client otherwise.
    """
    kw = dict(timeout=timeout, max_retries=retries, rate_limiter=RateLimiter(rate_limit))
    if name == 'mock':
        if script:
            return ScriptedClient.from_file(script, **kw)
        return EchoClient(**kw)
    if name == 'empty':
        return EmptyClient(**kw)
    if name == 'live':
        return LiveClient(
            endpoint=endpoint or os.environ.get('PTMCHAIN_LIVE_ENDPOINT'),
            model_id=model_id,
            api_key=os.environ.get(api_key_env),
            **kw)
    raise ValueError('unknown client: {0}'.format(name))
