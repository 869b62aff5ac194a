import json
import typing

from termcolor import colored

__all__ = ['message', 'summary_line', 'to_json']


def message(obj, msg):
    return '{0}: {1}'.format(colored('{0}'.format(obj), 'blue', attrs=['bold']), msg)


def to_json(obj):
    """
    JSON-serializable representation of `obj`, honoring a `__json__` method.
    """
    if hasattr(obj, '__json__'):
        return to_json(obj.__json__())
    if isinstance(obj, dict):
        return {str(k): to_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        return [to_json(v) for v in obj]
    return obj


def summary_line(command: str, status: str = 'ok', **data: typing.Any) -> str:
    """
    >>> summary_line('map', links=4)
    '{"command": "map", "links": 4, "status": "ok"}'
    """
    data.update(command=command, status=status)
    return json.dumps(to_json(data), sort_keys=True, ensure_ascii=False)
