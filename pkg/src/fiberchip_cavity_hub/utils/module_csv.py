# ---------------------------------------------------------------------------
# License:
# Copyright (c) 2025 Fiberchip Cavity Hub developers
#
# Name:        module_csv.py
# Purpose:     CSV outputs with a provenance header block
#
# ---------------------------------------------------------------------------
import io
import os

import pandas as pd

from .filesystem import mkdirs
from .status_exception import StatusException
from ..cli.module_version import get_version


SCHEMA_VERSION = 'v1'
FLOAT_FORMAT = '%.10g'


def header_lines(schema, seed, config_hash):
    """
    header_lines - the "# key=value" block opening every CSV
    """
    return [
        f'# schema={schema} {SCHEMA_VERSION}',
        f'# toolkit_version={get_version()}',
        f'# seed={seed}',
        f'# config_hash={config_hash}',
    ]


def to_csv_text(df: pd.DataFrame, schema, seed, config_hash):
    """
    to_csv_text - render the header block and the table
    """
    body = df.to_csv(index=False, float_format=FLOAT_FORMAT, na_rep='nan', lineterminator='\n')
    return '\n'.join(header_lines(schema, seed, config_hash)) + '\n' + body


def write_csv(df: pd.DataFrame, filename, schema, seed, config_hash):
    """
    write_csv - write df to filename with the provenance header
    """
    mkdirs(os.path.dirname(filename))
    with open(filename, 'w', encoding='utf-8', newline='') as stream:
        stream.write(to_csv_text(df, schema, seed, config_hash))
    return filename


def read_header(filename):
    """
    read_header - parse the "# key=value" lines at the top of a CSV
    """
    header = {}
    with open(filename, 'r', encoding='utf-8') as stream:
        for line in stream:
            if not line.startswith('#'):
                break
            key, _, value = line[1:].strip().partition('=')
            header[key.strip()] = value.strip()
    return header


def read_csv(filename, schema=None):
    """
    read_csv - read a CSV written by write_csv, checking its schema when given
    """
    if not os.path.isfile(filename):
        raise StatusException(StatusException.INVALID, f'file not found: {filename}')
    header = read_header(filename)
    if schema is not None and header.get('schema', '').split(' ')[0] != schema:
        raise StatusException(StatusException.INVALID, f'{filename}: expected schema "{schema}", found "{header.get("schema")}"')
    with open(filename, 'r', encoding='utf-8') as stream:
        text = ''.join(line for line in stream if not line.startswith('#'))
    return pd.read_csv(io.StringIO(text)), header
