#!/usr/bin/env python3
"""
Legweb command-line interface
Exact construction and verification of the Abelian relations of Legendrian
d-webs, the depth-graded symbol check of the rank bound, and numeric checks of
the maximal-rank 3-web normal forms and the Darboux example.

Exit codes: 0 all checks pass, 1 a mathematical check failed, 2 usage or I/O error.
"""

import argparse
import json
import logging
import os
import sys
import time
from typing import Dict, List, Optional

import numpy as np

try:
    from .exact_algebra import LegwebError
    from .contact_forms import contact_nondegeneracy
    from .abelian_relations import (
        build_relations, relation_depth, relations_satisfy_prolongation, rho, rho_decomposition,
        vandermonde_complement, verify_all,
    )
    from .prolongation_symbol import (
        counting_table, depth_block, relations_satisfy_symbol, symbol_summary, total_sum_check,
    )
    from .numeric_webs import (
        HOLONOMY_TOL, NormalFormField, Point3, STRUCTURE_TOL, darboux_check, loop_holonomy,
        maximal_rank_report, normal_form_box, normal_form_coframe, normal_form_web, rectangle_loop,
        sample_points, structure_residuals,
    )
    from .exports import (
        RunReport, counting_table_document, export_relations_file, format_rho, format_table, input_digest,
        relations_document, write_json,
    )
    from .imports import load_relations_file, web_from_args
except ImportError:
    from exact_algebra import LegwebError
    from contact_forms import contact_nondegeneracy
    from abelian_relations import (
        build_relations, relation_depth, relations_satisfy_prolongation, rho, rho_decomposition,
        vandermonde_complement, verify_all,
    )
    from prolongation_symbol import (
        counting_table, depth_block, relations_satisfy_symbol, symbol_summary, total_sum_check,
    )
    from numeric_webs import (
        HOLONOMY_TOL, NormalFormField, Point3, STRUCTURE_TOL, darboux_check, loop_holonomy,
        maximal_rank_report, normal_form_box, normal_form_coframe, normal_form_web, rectangle_loop,
        sample_points, structure_residuals,
    )
    from exports import (
        RunReport, counting_table_document, export_relations_file, format_rho, format_table, input_digest,
        relations_document, write_json,
    )
    from imports import load_relations_file, web_from_args

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(name)s:%(levelname)s:%(message)s'


def _emit(args, report: RunReport, lines: List[str]) -> int:
    """Print the human lines or the JSON report, write --out, and map to an exit code."""
    report.wall_time = time.perf_counter() - args.started
    if getattr(args, 'json', False):
        print(json.dumps(report.to_json(), indent=2))
    else:
        for line in lines:
            print(line)
        print("PASS" if report.passed else "FAIL")
    out = getattr(args, 'out', None)
    if out:
        write_json(out, report.to_json())
    return 0 if report.passed else 1


def _mark(ok: bool) -> str:
    return "ok" if ok else "FAILED"


def cmd_rho(args, report: RunReport) -> int:
    value = rho(args.d)
    report.checks["decomposition"] = value == sum(count * odd for count, odd in rho_decomposition(args.d))
    report.counts["rho"] = value
    return _emit(args, report, [format_rho(args.d)])


def cmd_construct(args, report: RunReport) -> int:
    web = web_from_args(args.d, args.q)
    complement = vandermonde_complement(web)
    relations = build_relations(web, complement)
    report.counts["relations"] = len(relations)
    report.counts["rho"] = rho(web.d)
    report.checks["count"] = len(relations) == rho(web.d)
    report.checks["complement"] = complement.check(web)
    if args.out:
        export_relations_file(args.out, web, relations, complement)
        lines = [f"Wrote {len(relations)} relations for d = {web.d} to {args.out}"]
    else:
        lines = [json.dumps(relations_document(web, relations, complement), indent=2)]
    report.wall_time = time.perf_counter() - args.started
    if args.json:
        print(json.dumps(report.to_json(), indent=2))
    else:
        for line in lines:
            print(line)
    return 0 if report.passed else 1


def cmd_verify(args, report: RunReport) -> int:
    loaded = load_relations_file(args.path)
    report.input_digest = input_digest(loaded.raw)
    web, relations = loaded.web, loaded.relations
    verification = verify_all(relations, web)
    depth_max = 2 * web.d - 3
    report.checks["relations"] = verification.all_relations_pass
    report.checks["rank"] = verification.rank_matches
    report.checks["symbol"] = relations_satisfy_symbol(web, relations, depth_max)
    report.checks["prolongation"] = relations_satisfy_prolongation(web, relations, depth_max)
    report.checks["depth"] = all(relation_depth(rel) <= 2 * web.d - 4 for rel in relations)
    report.checks["contact"] = not contact_nondegeneracy().is_zero()
    if loaded.complement is not None:
        report.checks["complement"] = loaded.complement.check(web)
    report.counts.update({"relations": len(relations), "rank": verification.rank, "rho": verification.rho})
    failed = [i for i, rel in enumerate(verification.reports) if not rel.passed]
    report.details["failed_relations"] = failed
    lines = [f"d = {web.d}, {len(relations)} relations, rank {verification.rank}, rho_{web.d} = {verification.rho}"]
    lines += [f"{name}: {_mark(ok)}" for name, ok in report.checks.items()]
    if failed:
        lines.append(f"failing relations: {failed}")
    return _emit(args, report, lines)


def cmd_symbol(args, report: RunReport) -> int:
    web = web_from_args(args.d, args.q)
    if args.depth is not None:
        block = depth_block(web, args.depth)
        row = {"depth": args.depth, "vars": block.n_variables, "eqs": block.n_equations,
               "rank": block.rank(), "full_rank": block.is_full_rank()}
        report.checks["full_rank"] = row["full_rank"]
        report.counts.update({"vars": row["vars"], "eqs": row["eqs"], "rank": row["rank"]})
        report.details["rows"] = [row]
        return _emit(args, report, [format_table([row], ["depth", "vars", "eqs", "rank", "full_rank"])])
    summary = symbol_summary(web)
    report.checks["full_rank"] = summary.all_full_rank
    report.checks["solution_count"] = summary.solution_count == summary.rho
    report.checks["total_sum"] = total_sum_check(web.d)
    report.counts.update({"total_vars": summary.total_variables, "total_ranks": summary.total_ranks,
                          "solution_count": summary.solution_count, "rho": summary.rho})
    report.details["rows"] = summary.rows
    lines = [
        format_table(summary.rows, ["depth", "vars", "eqs", "rank", "full_rank"]),
        f"sum vars - sum ranks = {summary.solution_count}, rho_{web.d} = {summary.rho}",
        f"total-sum identity: {_mark(report.checks['total_sum'])}",
    ]
    return _emit(args, report, lines)


def cmd_table(args, report: RunReport) -> int:
    rows = counting_table(args.d)
    document = counting_table_document(args.d, rows)
    total_vars = sum(row[1] for row in rows)
    total_eqs = sum(row[2] for row in rows)
    report.checks["total_sum"] = total_sum_check(args.d)
    report.counts.update({"total_vars": total_vars, "total_eqs": total_eqs, "rho": rho(args.d)})
    report.details["rows"] = document["rows"]
    lines = [
        format_table(document["rows"], ["depth", "vars", "eqs"]),
        f"total: {total_vars} vars, {total_eqs} eqs, difference {total_vars - total_eqs}, rho_{args.d} = {rho(args.d)}",
    ]
    return _emit(args, report, lines)


def _normal_form_params(args) -> Dict[str, float]:
    params = {}
    if args.R is not None:
        params['R'] = args.R
    if args.T is not None:
        params['T'] = args.T
    return params


def cmd_normal_form(args, report: RunReport) -> int:
    params = _normal_form_params(args)
    cf = normal_form_coframe(args.case, params)
    rng = np.random.default_rng(args.seed)
    low, high = normal_form_box(args.case, cf.params)
    samples = sample_points(cf.domain, args.samples, rng, low, high)
    max_residual = max(max(structure_residuals(cf, pt)) for pt in samples)
    web = normal_form_web(args.case, cf.params)
    rank_report = maximal_rank_report(web, samples[:args.torsion_samples])
    center = Point3.from_array((low + high) / 2.0)
    holonomy = loop_holonomy(NormalFormField(cf), rectangle_loop(center, (0, 2), 0.1), args.step)
    report.checks["structure"] = max_residual < STRUCTURE_TOL
    report.checks["maximal_rank"] = rank_report.passed
    report.checks["holonomy"] = holonomy < HOLONOMY_TOL
    report.counts["samples"] = len(samples)
    report.details.update({
        "case": args.case, "params": cf.params, "samples": len(samples), "max_residual": max_residual,
        "max_NL": rank_report.max_NL, "max_covariant": rank_report.max_covariant, "holonomy": holonomy,
        "pass": report.passed,
    })
    lines = [
        f"{args.case} {cf.params}: {len(samples)} samples",
        f"structure residual {max_residual:.3e}: {_mark(report.checks['structure'])}",
        f"max |N|,|L| {rank_report.max_NL:.3e}, covariant derivatives {rank_report.max_covariant:.3e}: "
        f"{_mark(report.checks['maximal_rank'])}",
        f"loop holonomy {holonomy:.3e}: {_mark(report.checks['holonomy'])}",
    ]
    return _emit(args, report, lines)


def cmd_darboux(args, report: RunReport) -> int:
    rng = np.random.default_rng(args.seed)
    samples = sample_points(lambda pt: True, args.samples, rng, [-1.0, -1.0, 0.5], [1.0, 1.0, 2.0])
    darboux = darboux_check(args.Dplus, args.D, samples)
    report.checks["darboux"] = darboux.passed
    report.counts["samples"] = len(samples)
    report.details.update(darboux.to_json())
    lines = [
        f"Darboux relations, D_plus = {args.Dplus}, D = {args.D}, {len(samples)} samples",
        f"sum residual {darboux.max_sum_residual:.3e}, annihilation residual "
        f"{darboux.max_annihilation_residual:.3e}",
    ]
    return _emit(args, report, lines)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0.0:
        raise argparse.ArgumentTypeError(f"expected a number > 0, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='legweb', description="Legendrian web rank verification")
    parser.add_argument('--log-level', default=os.environ.get('LEGWEB_LOG_LEVEL', 'WARNING'),
                        help="Logging level (default: LEGWEB_LOG_LEVEL or WARNING)")
    sub = parser.add_subparsers(dest='command', required=True)

    def add_common(p):
        p.add_argument('--json', action='store_true', help="Print the machine-readable report")
        p.add_argument('--out', help="Write the output file to this path")

    p = sub.add_parser('rho', help="Print rho_d and its decomposition")
    p.add_argument('d', type=int)
    add_common(p)
    p.set_defaults(handler=cmd_rho)

    p = sub.add_parser('construct', help="Build the rho_d Abelian relations of the model web")
    p.add_argument('--d', type=int)
    p.add_argument('--q', help="Comma-separated distinct rationals (default 0..d-1)")
    add_common(p)
    p.set_defaults(handler=cmd_construct)

    p = sub.add_parser('verify', help="Verify a relations file exactly")
    p.add_argument('path')
    add_common(p)
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser('symbol', help="Rank the depth blocks of the symbol")
    p.add_argument('--d', type=int)
    p.add_argument('--q')
    p.add_argument('--depth', type=int)
    add_common(p)
    p.set_defaults(handler=cmd_symbol)

    p = sub.add_parser('table', help="Closed-form variable and equation counts per depth")
    p.add_argument('--d', type=int, required=True)
    add_common(p)
    p.set_defaults(handler=cmd_table)

    p = sub.add_parser('normal-form', help="Numeric checks of a maximal-rank normal form")
    p.add_argument('--case', required=True, choices=['zero_disc', 'positive_disc', 'negative_disc'])
    p.add_argument('--R', type=float)
    p.add_argument('--T', type=float)
    p.add_argument('--samples', type=_positive_int, default=100)
    p.add_argument('--torsion-samples', type=_positive_int, default=10)
    p.add_argument('--step', type=_positive_float, default=1e-3)
    p.add_argument('--seed', type=int, default=0)
    add_common(p)
    p.set_defaults(handler=cmd_normal_form)

    p = sub.add_parser('darboux', help="Check the Darboux Abelian relations")
    p.add_argument('--Dplus', type=float, required=True)
    p.add_argument('--D', type=float, required=True)
    p.add_argument('--samples', type=_positive_int, default=200)
    p.add_argument('--seed', type=int, default=0)
    add_common(p)
    p.set_defaults(handler=cmd_darboux)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING), format=LOG_FORMAT)
    report = RunReport(argv, input_digest(" ".join(argv)))
    args.started = time.perf_counter()
    try:
        code = args.handler(args, report)
    except (OSError, LegwebError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    logger.info(f"{args.command} finished in {time.perf_counter() - args.started:.2f}s with exit code {code}")
    return code


if __name__ == '__main__':
    sys.exit(main())
