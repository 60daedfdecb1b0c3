"""
JSON and text export functionality for Legweb
Relations files, verification and symbol reports, counting tables and the
RunReport record every command can emit.
"""

import hashlib
import json
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

try:
    from ..model_web import WebSpec
    from ..abelian_relations import AbelianRelation, ComplementVectors, rho, rho_decomposition
except ImportError:
    from model_web import WebSpec
    from abelian_relations import AbelianRelation, ComplementVectors, rho, rho_decomposition

logger = logging.getLogger(__name__)


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(',', ':'))


def input_digest(data) -> str:
    """sha256 of the canonical JSON form of data (a plain string is hashed as is)."""
    text = data if isinstance(data, str) else canonical_json(data)
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def relations_document(web: WebSpec, relations: Sequence[AbelianRelation],
                       complement: Optional[ComplementVectors] = None) -> Dict:
    return {
        "web": web.to_json(),
        "complement_vectors": complement.to_json() if complement is not None else None,
        "relations": [rel.to_json() for rel in relations],
    }


def write_json(path: str, data: Dict) -> None:
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(data, handle, indent=2)
        handle.write('\n')
    logger.info(f"Wrote {path}")


def export_relations_file(path: str, web: WebSpec, relations: Sequence[AbelianRelation],
                          complement: Optional[ComplementVectors] = None) -> Dict:
    """Write the relations file and return the document that was written."""
    document = relations_document(web, relations, complement)
    write_json(path, document)
    return document


def format_rho(d: int) -> str:
    """One line such as: rho_4 = 11 = 2*3 + 1*5"""
    terms = " + ".join(f"{count}*{odd}" for count, odd in rho_decomposition(d))
    return f"rho_{d} = {rho(d)} = {terms}"


def format_table(rows: Sequence[Dict], columns: Sequence[str]) -> str:
    """Right-aligned text table of dict rows."""
    widths = [max(len(col), *(len(str(row[col])) for row in rows)) if rows else len(col) for col in columns]
    lines = ["  ".join(col.rjust(w) for col, w in zip(columns, widths))]
    for row in rows:
        lines.append("  ".join(str(row[col]).rjust(w) for col, w in zip(columns, widths)))
    return "\n".join(lines)


def counting_table_document(d: int, rows: Sequence[Tuple[int, int, int]]) -> Dict:
    return {
        "d": d,
        "rows": [{"depth": depth, "vars": n_vars, "eqs": n_eqs} for depth, n_vars, n_eqs in rows],
        "rho": rho(d),
    }


@dataclass
class RunReport:
    """Machine-readable summary of one command run."""

    command: List[str]
    input_digest: str
    checks: Dict[str, bool] = field(default_factory=dict)
    counts: Dict[str, int] = field(default_factory=dict)
    details: Dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_json(self) -> Dict:
        return {
            "command": list(self.command),
            "input_digest": self.input_digest,
            "checks": dict(self.checks),
            "counts": {name: str(value) for name, value in self.counts.items()},
            "details": self.details,
            "wall_time": self.wall_time,
            "pass": self.passed,
        }

    @classmethod
    def from_json(cls, data: Dict) -> 'RunReport':
        return cls(
            list(data["command"]),
            data["input_digest"],
            dict(data.get("checks", {})),
            {name: int(value) for name, value in data.get("counts", {}).items()},
            dict(data.get("details", {})),
            float(data.get("wall_time", 0.0)),
        )
