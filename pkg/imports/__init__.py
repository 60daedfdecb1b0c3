"""
Imports package for Legweb
Provides functionality to read relations files, web descriptions and q-lists
"""

from .relations_importer import (
    RelationFile, RelationFileError, load_relations_file, parse_q_list, parse_relations_document,
    web_from_args,
)

__all__ = [
    'RelationFile',
    'RelationFileError',
    'load_relations_file',
    'parse_q_list',
    'parse_relations_document',
    'web_from_args'
]
