"""
Relations import functionality for Legweb
Reads relations files written by `construct`, web descriptions and q-lists
given on the command line.
"""

import json
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

try:
    from ..exact_algebra import LegwebError, WebSpecError, parse_rational
    from ..model_web import WebSpec
    from ..abelian_relations import AbelianRelation, ComplementVectors
except ImportError:
    from exact_algebra import LegwebError, WebSpecError, parse_rational
    from model_web import WebSpec
    from abelian_relations import AbelianRelation, ComplementVectors

logger = logging.getLogger(__name__)


class RelationFileError(LegwebError):
    """Raised when a relations file is not valid JSON or misses required fields."""


@dataclass
class RelationFile:
    web: WebSpec
    relations: List[AbelianRelation]
    complement: Optional[ComplementVectors] = None
    raw: Optional[Dict] = None


def parse_q_list(text: str) -> Tuple[Fraction, ...]:
    """Parse a comma-separated list of rationals such as "0,1/2,-3".

    Raises:
        LegwebError: If an entry is not a rational literal
    """
    entries = [entry for entry in text.split(',') if entry.strip()]
    return tuple(parse_rational(entry) for entry in entries)


def web_from_args(d: Optional[int], q_text: Optional[str]) -> WebSpec:
    """WebSpec from --d and --q; q defaults to 0..d-1.

    Raises:
        WebSpecError: If neither is given, d disagrees with the q-list, or q-values repeat
    """
    if q_text is None:
        if d is None:
            raise WebSpecError("Give --d or --q")
        return WebSpec.default(d)
    web = WebSpec(parse_q_list(q_text))
    if d is not None and d != web.d:
        raise WebSpecError(f"--d {d} disagrees with {web.d} q-values")
    return web


def parse_relations_document(data: Dict) -> RelationFile:
    """Build a RelationFile from the decoded JSON document.

    Args:
        data: {"web": ..., "complement_vectors": [...], "relations": [...]}

    Returns:
        RelationFile with exact rational data

    Raises:
        RelationFileError: If required fields are missing or malformed
    """
    if not isinstance(data, dict):
        raise RelationFileError("Relations file must hold a JSON object")
    for key in ("web", "relations"):
        if key not in data:
            raise RelationFileError(f"Relations file misses '{key}'")
    try:
        web = WebSpec.from_json(data["web"])
        relations = [AbelianRelation.from_json(entry) for entry in data["relations"]]
        complement = None
        if data.get("complement_vectors") is not None:
            complement = ComplementVectors.from_json(data["complement_vectors"])
    except RelationFileError:
        raise
    except (LegwebError, TypeError, AttributeError) as exc:
        raise RelationFileError(f"Malformed relations file: {exc}") from exc
    logger.debug(f"Parsed {len(relations)} relations for d = {web.d}")
    return RelationFile(web, relations, complement, data)


def load_relations_file(path: str) -> RelationFile:
    """Read and parse a relations file.

    Raises:
        OSError: If the file cannot be read
        RelationFileError: If the content is not a valid relations document
    """
    with open(path, 'r', encoding='utf-8') as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise RelationFileError(f"{path} is not valid JSON: {exc}") from exc
        except UnicodeDecodeError as exc:
            raise RelationFileError(f"{path} is not UTF-8 text: {exc}") from exc
    return parse_relations_document(data)
