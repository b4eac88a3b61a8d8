"""
Experiment config loading, canonical form and sweeps.
"""
import copy
import hashlib
import json
import logging

from apps.core.exceptions import ConfigurationError

from .serializers import ExperimentConfigSerializer

logger = logging.getLogger(__name__)


def _plain(value):
    """Nested OrderedDicts and tuples as plain JSON types"""
    return json.loads(json.dumps(value))


def _flatten_errors(errors, prefix=''):
    if isinstance(errors, dict):
        for key, value in errors.items():
            name = key if key != 'non_field_errors' else ''
            yield from _flatten_errors(value, f'{prefix}.{name}'.strip('.') if name else prefix)
    elif isinstance(errors, list) and errors and not isinstance(errors[0], str):
        for index, value in enumerate(errors):
            yield from _flatten_errors(value, f'{prefix}[{index}]')
    else:
        for message in errors if isinstance(errors, list) else [errors]:
            yield f'{prefix or "config"}: {message}'


def load_config(data):
    """Validate a config document; returns plain nested dicts with defaults filled in"""
    serializer = ExperimentConfigSerializer(data=data)
    if not serializer.is_valid():
        raise ConfigurationError('invalid experiment config; ' + '; '.join(_flatten_errors(serializer.errors)))
    return _plain(serializer.validated_data)


def load_config_file(path):
    try:
        with open(path, encoding='utf-8') as handle:
            data = json.load(handle)
    except OSError as exc:
        raise ConfigurationError(f'cannot read config {path}: {exc.strerror}') from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f'config {path} is not valid JSON: {exc}') from exc
    return load_config(data)


def canonical_json(config):
    return json.dumps(config, sort_keys=True, separators=(',', ':'), ensure_ascii=True)


def config_hash(config):
    return hashlib.sha256(canonical_json(config).encode('utf-8')).hexdigest()


def parse_sweep(text):
    """`key=v1,v2,...` into (dotted key, values); values parse as JSON scalars when they can"""
    key, sep, raw = text.partition('=')
    if not sep or not key.strip() or not raw.strip():
        raise ConfigurationError(f'sweep must look like key=v1,v2,...; got {text!r}')
    values = []
    for item in raw.split(','):
        item = item.strip()
        try:
            values.append(json.loads(item))
        except json.JSONDecodeError:
            values.append(item)
    return key.strip(), values


def apply_override(config, dotted_key, value):
    """Copy of `config` with one dotted path set, revalidated"""
    updated = copy.deepcopy(config)
    *parents, leaf = dotted_key.split('.')
    node = updated
    for part in parents:
        child = node.get(part)
        if not isinstance(child, dict):
            raise ConfigurationError(f'sweep key {dotted_key!r} does not name a config section')
        node = child
    node[leaf] = value
    return load_config(updated)
