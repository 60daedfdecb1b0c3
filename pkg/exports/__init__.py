"""
Exports package for Legweb
Provides functionality to export relations, reports and tables (JSON, text)
"""

from .json_exporter import (
    RunReport, canonical_json, counting_table_document, export_relations_file, format_rho, format_table,
    input_digest, relations_document, write_json,
)

__all__ = [
    'RunReport',
    'canonical_json',
    'counting_table_document',
    'export_relations_file',
    'format_rho',
    'format_table',
    'input_digest',
    'relations_document',
    'write_json'
]
