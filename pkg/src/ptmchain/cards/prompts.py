"""
Assembly of extraction prompts from the editable templates in `data/prompts/`.

Templates are `str.format` templates; the placeholders are

- `prefix.txt`: `{model_name}`
- `metadata.txt`: `{fields}`
- `schema.txt`: `{schema}`
- `domain_task.txt`: `{domains}`, `{tasks}`
- `language.txt`: `{model_name}`
"""
import copy
import json
import typing
import pathlib

import attr

from .. import config
from .schema import load_schema, field_names

__all__ = [
    'TEMPLATE_DIR', 'FIELDS_MARKER', 'CONTEXT_MARKER', 'TemplateError', 'PromptBundle',
    'load_template', 'domain_and_task', 'assemble_prompt']

TEMPLATE_DIR = pathlib.Path(__file__).parent.parent / 'data' / 'prompts'
FIELDS_MARKER = '### FIELDS'
CONTEXT_MARKER = '### CONTEXT'
MODES = ('cheap', 'accurate')


class TemplateError(FileNotFoundError):
    pass


def load_template(name: str, template_dir=None) -> str:
    p = pathlib.Path(template_dir or TEMPLATE_DIR) / '{0}.txt'.format(name)
    if not p.exists():
        raise TemplateError('missing prompt template: {0}'.format(p))
    return p.read_text(encoding='utf-8').strip()


def domain_and_task(tags: typing.Iterable[str]) -> typing.Tuple[
        typing.Optional[str], typing.Optional[str]]:
    """
    Domain and task derived from registry tags, using the mapping in `domains.ini`.

    >>> domain_and_task(['pytorch', 'fill-mask'])
    ('NLP', 'fill-mask')
    """
    domain, task = None, None
    domains = config.load('domains')
    for tag in [t.lower() for t in tags or []]:
        for d in domains.values():
            if tag in d.tags:
                domain = domain or d.id
                if tag != d.id.lower():
                    task = task or tag
    return domain, task


def _non_empty(instance, attribute, value):
    if not value:
        raise ValueError('{0} must not be empty'.format(attribute.name))


@attr.s
class PromptBundle(object):
    prefix = attr.ib(validator=_non_empty)
    metadata_prompt = attr.ib(validator=_non_empty)
    schema_text = attr.ib()
    domain_task_prompts = attr.ib(default=None)
    language_prompt = attr.ib(default=None)
    #: The fields requested by the metadata prompt.
    fields = attr.ib(default=attr.Factory(list))

    def render(self, context: str) -> str:
        parts = [
            self.prefix,
            self.domain_task_prompts,
            self.language_prompt,
            self.metadata_prompt,
            self.schema_text,
            '{0}\n{1}'.format(FIELDS_MARKER, '\n'.join(self.fields)),
            '{0}\n{1}'.format(CONTEXT_MARKER, context),
        ]
        return '\n\n'.join(p for p in parts if p)


def assemble_prompt(model_name: str,
                    tags: typing.Iterable[str],
                    mode: str = 'accurate',
                    fields: typing.Optional[typing.Iterable[str]] = None,
                    template_dir=None) -> PromptBundle:
    """
    :param fields: Names of the metadata fields to request; all fields by default.
    :raises TemplateError: if a template file is missing.
    """
    if not model_name:
        raise ValueError('model name required')
    if mode not in MODES:
        raise ValueError('unknown mode: {0}'.format(mode))
    fields = list(fields or field_names())
    specs = config.load('metadata_fields')
    domain, task = domain_and_task(tags)

    schema = copy.deepcopy(load_schema())
    schema = dict(schema, properties={k: schema['properties'][k] for k in fields})
    schema.pop('$id', None)
    if mode == 'cheap':
        for prop in schema['properties'].values():
            prop.pop('description', None)
    schema_json = json.dumps(schema, separators=(',', ':')) if mode == 'cheap' \
        else json.dumps(schema, indent=2)

    res = PromptBundle(
        prefix=load_template('prefix', template_dir).format(model_name=model_name),
        metadata_prompt=load_template('metadata', template_dir).format(fields='\n'.join(
            '- {0}: {1}'.format(f, specs[f].description) for f in fields)),
        schema_text=load_template('schema', template_dir).format(schema=schema_json),
        fields=fields,
    )
    if not (domain and task):
        domains = config.load('domains')
        res.domain_task_prompts = load_template('domain_task', template_dir).format(
            domains=', '.join(domains),
            tasks=', '.join(
                t for d in domains.values() for t in d.tags if t != d.id.lower()))
    if domain == 'NLP':
        res.language_prompt = load_template('language', template_dir).format(
            model_name=model_name)
    return res
