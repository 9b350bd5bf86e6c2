"""Evidence grading, claim gates, and report rendering.

Claim templates are a closed enum; free text is never gated and therefore
never emitted as a verdict. The report serializer derives the closure-ratio
section from the final-closure verdict itself, so a blocked final claim can
never appear next to a numeric ratio: the forbidden combination is
unrepresentable, not merely unvalidated.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .admissibility import BandAssignment
from .core_model import (
    REPORT_SCHEMA_VERSION,
    Breakpoint,
    BreakpointCode,
    CaseBundle,
    ClaimBlockReason,
    ClaimLevel,
    EvidenceGrade,
    EvidenceSource,
    GateDecision,
    GateOutcome,
    Landing,
    Motive,
    RouteKind,
    TriState,
    UnitKind,
    canonical_decimal,
    canonical_json,
    order_block_reasons,
)
from .coverage import CoverageResult, EthRewardResult, FeeShareResult, RcrBlocked, \
    RcrInterval, RcrPoint
from .errors import EvrcError, InputError
from .numerator import NumeratorResult


class ClaimTemplate(str, Enum):
    """Closed set of gateable claim statements.

    New statement kinds require a new enum entry plus a gate rule here;
    anything outside the enum is rejected as input, never silently emitted.
    """

    MECHANISM_ROUTE_EXISTS = "MECHANISM_ROUTE_EXISTS"
    BOUNDED_FEE_SHARE = "BOUNDED_FEE_SHARE"
    NO_ROUTE_IN_CAPTURED_SOURCES = "NO_ROUTE_IN_CAPTURED_SOURCES"
    FINAL_RCR = "FINAL_RCR"
    FINAL_NCD = "FINAL_NCD"
    HISTORICAL_ROUTE_NULL = "HISTORICAL_ROUTE_NULL"
    NO_REVENUE = "NO_REVENUE"
    STABLE_FEE_REPLACEMENT = "STABLE_FEE_REPLACEMENT"
    BURN_AS_COVERAGE = "BURN_AS_COVERAGE"
    EXTERNALLY_FUNDED_REWARDS = "EXTERNALLY_FUNDED_REWARDS"
    CROSS_RECIPIENT_COVERAGE = "CROSS_RECIPIENT_COVERAGE"


TEMPLATE_LEVELS: dict[ClaimTemplate, ClaimLevel] = {
    ClaimTemplate.MECHANISM_ROUTE_EXISTS: ClaimLevel.MECHANISM,
    ClaimTemplate.BOUNDED_FEE_SHARE: ClaimLevel.BOUNDED_NUMERIC,
    ClaimTemplate.NO_ROUTE_IN_CAPTURED_SOURCES: ClaimLevel.BOUNDED_NUMERIC,
    ClaimTemplate.FINAL_RCR: ClaimLevel.FINAL_CLOSURE,
    ClaimTemplate.FINAL_NCD: ClaimLevel.FINAL_CLOSURE,
    ClaimTemplate.HISTORICAL_ROUTE_NULL: ClaimLevel.FINAL_CLOSURE,
    ClaimTemplate.NO_REVENUE: ClaimLevel.FINAL_CLOSURE,
    ClaimTemplate.STABLE_FEE_REPLACEMENT: ClaimLevel.FINAL_CLOSURE,
    ClaimTemplate.BURN_AS_COVERAGE: ClaimLevel.FINAL_CLOSURE,
    ClaimTemplate.EXTERNALLY_FUNDED_REWARDS: ClaimLevel.FINAL_CLOSURE,
    ClaimTemplate.CROSS_RECIPIENT_COVERAGE: ClaimLevel.FINAL_CLOSURE,
}


@dataclass(frozen=True)
class ClaimRequest:
    case_id: str
    template: ClaimTemplate
    level: ClaimLevel

    @classmethod
    def for_template(cls, case_id: str, template: ClaimTemplate) -> "ClaimRequest":
        return cls(case_id=case_id, template=template, level=TEMPLATE_LEVELS[template])


@dataclass(frozen=True)
class ClaimVerdict:
    request: ClaimRequest
    allowed: bool
    blocking_reasons: tuple[ClaimBlockReason, ...]


def grade_evidence(sources: list[EvidenceSource] | tuple[EvidenceSource, ...],
                   level: ClaimLevel) -> bool:
    """Is the source set sufficient for claims at this level?

    Mechanism claims need G1 or G2; bounded numeric claims need G1, or G2
    with fields and dates specified; final closure claims need G1. A case
    supported only by media/narrative (G3) is insufficient at every level.
    """
    has_g1 = any(s.grade is EvidenceGrade.G1 for s in sources)
    has_g2 = any(s.grade is EvidenceGrade.G2 for s in sources)
    has_g2_numeric = any(s.grade is EvidenceGrade.G2 and s.fields_and_dates_specified
                         for s in sources)
    if level is ClaimLevel.MECHANISM:
        return has_g1 or has_g2
    if level is ClaimLevel.BOUNDED_NUMERIC:
        return has_g1 or has_g2_numeric
    return has_g1


def _level_blockers(level: ClaimLevel, bundle: CaseBundle,
                    outcomes: tuple[GateOutcome, ...] | list[GateOutcome],
                    coverage: CoverageResult) -> list[ClaimBlockReason]:
    """Blocking reasons shared by every template at a level; strictly nested."""
    blockers: list[ClaimBlockReason] = []
    if not grade_evidence(bundle.sources, ClaimLevel.MECHANISM):
        blockers.append(ClaimBlockReason.EVIDENCE_GRADE_INSUFFICIENT)
    if level is ClaimLevel.MECHANISM:
        return blockers

    if not grade_evidence(bundle.sources, ClaimLevel.BOUNDED_NUMERIC):
        blockers.append(ClaimBlockReason.EVIDENCE_GRADE_INSUFFICIENT)
    if level is ClaimLevel.BOUNDED_NUMERIC:
        return blockers

    if not grade_evidence(bundle.sources, ClaimLevel.FINAL_CLOSURE):
        blockers.append(ClaimBlockReason.EVIDENCE_GRADE_INSUFFICIENT)
    if bundle.unit.is_mixed:
        blockers.append(ClaimBlockReason.UNIT_MIXED)
    if not bundle.recipient.is_specified:
        blockers.append(ClaimBlockReason.RECIPIENT_UNSPECIFIED)

    accepted = [o for o in outcomes if o.decision is GateDecision.ACCEPTED]
    if not accepted:
        blockers.append(ClaimBlockReason.NO_ACCEPTED_ROUTE)

    if isinstance(coverage.rcr, RcrBlocked):
        blockers.extend(coverage.rcr.reasons)

    # Unknown-motive flows offered toward the numerator narrow the claim:
    # bounded stays available, final closure does not.
    if any(f.motive is Motive.UNKNOWN and f.intended_numerator for f in bundle.flows):
        blockers.append(ClaimBlockReason.MOTIVE_UNCLEAR_NARROWED)

    # A revocable route lowers the claim gate instead of the band.
    accepted_route_ids = {o.route_id for o in accepted if o.route_id}
    if any(r.checks.revocability is TriState.YES for r in bundle.routes
           if r.id in accepted_route_ids):
        blockers.append(ClaimBlockReason.REVOCABLE_ROUTE_DOWNGRADE)

    return blockers


def _mechanism_route_exists(bundle: CaseBundle, outcomes, bands) -> bool:
    """A route mechanism exists: some positive-band route whose flow was not
    demonstrably rejected (accepted or merely source-blocked)."""
    by_flow = {o.flow_id: o for o in outcomes}
    for r in bundle.routes:
        if r.route_kind is RouteKind.NONE:
            continue
        band = bands.get(r.id)
        if band is None or band.band_e <= 0:
            continue
        o = by_flow.get(r.flow_id)
        if o is not None and o.decision is not GateDecision.REJECTED:
            return True
    return False


def gate_claim(request: ClaimRequest, bundle: CaseBundle,
               outcomes: tuple[GateOutcome, ...] | list[GateOutcome],
               coverage: CoverageResult,
               breakpoints: tuple[Breakpoint, ...],
               bands: dict[str, BandAssignment] | None = None) -> ClaimVerdict:
    """Gate one claim template against the fully-coded case."""
    if not isinstance(request.template, ClaimTemplate):
        raise InputError(f"unknown claim template {request.template!r}")
    if TEMPLATE_LEVELS[request.template] is not request.level:
        raise InputError(
            f"template {request.template.value} is a "
            f"{TEMPLATE_LEVELS[request.template].value}, not a {request.level.value}")
    bands = bands or {}
    tmpl = request.template
    bp_codes = {b.code for b in breakpoints}
    accepted_any = any(o.decision is GateDecision.ACCEPTED for o in outcomes)

    reasons: list[ClaimBlockReason]
    if tmpl is ClaimTemplate.FINAL_NCD:
        # Appears in claim boundaries as a label only; no formula exists.
        reasons = [ClaimBlockReason.UNDEFINED_METRIC]
    elif tmpl is ClaimTemplate.HISTORICAL_ROUTE_NULL:
        # Absence in captured sources never proves historical absence.
        reasons = [ClaimBlockReason.SOURCE_COVERAGE_GAP]
    elif tmpl is ClaimTemplate.STABLE_FEE_REPLACEMENT:
        # A single captured window cannot establish a stable replacement.
        reasons = [ClaimBlockReason.SOURCE_COVERAGE_GAP]
    elif tmpl is ClaimTemplate.BURN_AS_COVERAGE:
        reasons = [ClaimBlockReason.B3_BURN_CONFUSION]
    elif tmpl is ClaimTemplate.CROSS_RECIPIENT_COVERAGE:
        # Coverage for a recipient other than the case's specified one.
        reasons = [ClaimBlockReason.RECIPIENT_UNSPECIFIED]
    elif tmpl is ClaimTemplate.NO_REVENUE:
        reasons = [ClaimBlockReason.SOURCE_COVERAGE_GAP]
        if (bundle.unit.kind in (UnitKind.APP, UnitKind.COMPANY, UnitKind.COMPOSITE)
                and bundle.flows):
            reasons.append(ClaimBlockReason.LANDING_ACTIVITY_RECORDED)
    elif tmpl is ClaimTemplate.MECHANISM_ROUTE_EXISTS:
        reasons = _level_blockers(ClaimLevel.MECHANISM, bundle, outcomes, coverage)
        if not _mechanism_route_exists(bundle, outcomes, bands):
            reasons.append(ClaimBlockReason.NO_ACCEPTED_ROUTE)
    elif tmpl is ClaimTemplate.BOUNDED_FEE_SHARE:
        reasons = _level_blockers(ClaimLevel.BOUNDED_NUMERIC, bundle, outcomes, coverage)
        has_rows = bool(bundle.block_rows or bundle.eth_reward_rows or bundle.fee_rows)
        if not accepted_any and not has_rows:
            reasons.append(ClaimBlockReason.NO_ACCEPTED_ROUTE)
    elif tmpl is ClaimTemplate.NO_ROUTE_IN_CAPTURED_SOURCES:
        reasons = _level_blockers(ClaimLevel.BOUNDED_NUMERIC, bundle, outcomes, coverage)
        if accepted_any:
            reasons.append(ClaimBlockReason.ACCEPTED_ROUTE_PRESENT)
    elif tmpl is ClaimTemplate.FINAL_RCR:
        reasons = _level_blockers(ClaimLevel.FINAL_CLOSURE, bundle, outcomes, coverage)
    elif tmpl is ClaimTemplate.EXTERNALLY_FUNDED_REWARDS:
        reasons = _level_blockers(ClaimLevel.FINAL_CLOSURE, bundle, outcomes, coverage)
        if BreakpointCode.B4_ISSUANCE_MARKET_DEPENDENCE in bp_codes:
            reasons.append(ClaimBlockReason.B4_DEPENDENCE)
    else:  # pragma: no cover - enum is closed
        raise InputError(f"unknown claim template {request.template!r}")

    ordered = order_block_reasons(reasons)
    return ClaimVerdict(request=request, allowed=not ordered, blocking_reasons=ordered)


def gate_all_claims(bundle: CaseBundle, outcomes, coverage: CoverageResult,
                    breakpoints: tuple[Breakpoint, ...],
                    bands: dict[str, BandAssignment]) -> tuple[ClaimVerdict, ...]:
    """Gate every template in enum order; reports carry the full verdict set."""
    return tuple(
        gate_claim(ClaimRequest.for_template(bundle.case_id, t), bundle, outcomes,
                   coverage, breakpoints, bands)
        for t in ClaimTemplate
    )


# ---------------------------------------------------------------------------
# Report rendering
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CaseReport:
    document: dict

    def to_json(self) -> str:
        return canonical_json(self.document)

    def to_text(self) -> str:
        return _render_text(self.document)


def _figure(value, grade: EvidenceGrade | None, period: str) -> dict:
    """Every numeric figure carries its evidence grade and period."""
    return {
        "value": canonical_decimal(value),
        "evidence_grade": grade.value if grade else None,
        "period": period,
    }


def _rcr_section(coverage: CoverageResult, final_verdict: ClaimVerdict,
                 grade: EvidenceGrade | None) -> dict:
    """Closure-ratio section derived from the final-closure verdict.

    When the final claim is blocked the section has no value field at all, so
    a numeric ratio cannot coexist with a blocked verdict.
    """
    if not final_verdict.allowed:
        return {
            "status": "blocked",
            "reasons": [r.value for r in final_verdict.blocking_reasons],
        }
    rcr = coverage.rcr
    if isinstance(rcr, RcrPoint):
        return {
            "status": "reported",
            "value": canonical_decimal(rcr.value),
            "evidence_grade": grade.value if grade else None,
            "period": coverage.period_label,
        }
    if isinstance(rcr, RcrInterval):
        return {
            "status": "reported",
            "interval_low": canonical_decimal(rcr.low),
            "interval_high": canonical_decimal(rcr.high),
            "evidence_grade": grade.value if grade else None,
            "period": coverage.period_label,
        }
    raise EvrcError(
        "internal invariant failure: final closure claim allowed while the "
        "closure ratio is blocked")


def render_report(bundle: CaseBundle,
                  outcomes: tuple[GateOutcome, ...] | list[GateOutcome],
                  coverage: CoverageResult,
                  breakpoints: tuple[Breakpoint, ...],
                  verdicts: tuple[ClaimVerdict, ...],
                  numerator: NumeratorResult,
                  bands: dict[str, BandAssignment],
                  coding_trace: list[str],
                  eth_rows: list[tuple[str, EthRewardResult]] | None = None,
                  fee_share: FeeShareResult | None = None) -> CaseReport:
    """Assemble the machine-readable case report (schema evrc-report/1)."""
    grade = bundle.best_evidence_grade()
    period = bundle.analysis_period()
    final_verdict = next(v for v in verdicts
                         if v.request.template is ClaimTemplate.FINAL_RCR)

    denom = coverage.denominator
    denom_doc: dict = {"status": denom.status.value, "source_ids": list(denom.source_ids)}
    if denom.value is not None:
        denom_doc["value"] = _figure(denom.value, grade, coverage.period_label)
    if denom.bound_low is not None and denom.bound_high is not None:
        denom_doc["bound_low"] = _figure(denom.bound_low, grade, coverage.period_label)
        denom_doc["bound_high"] = _figure(denom.bound_high, grade, coverage.period_label)

    accepted_route_ids = {o.route_id for o in outcomes
                          if o.decision is GateDecision.ACCEPTED and o.route_id}
    pooled_capture = (
        bundle.unit.kind in (UnitKind.APP, UnitKind.COMPANY)
        and any(r.route_kind is RouteKind.CONTRACTUAL_PLATFORM_RULE
                for r in bundle.routes if r.id in accepted_route_ids)
    )
    revocable_flag = any(r.checks.revocability is TriState.YES
                         for r in bundle.routes if r.id in accepted_route_ids)
    source_gap_flag = any(o.decision is GateDecision.SOURCE_BLOCKED for o in outcomes)

    warnings: list[str] = []
    if numerator.negative_warning:
        warnings.append("net external-use value is negative (deductions exceed "
                        "admissible inflows); reported unclamped")
    if fee_share is not None and fee_share.skipped_starts:
        warnings.append(
            f"{len(fee_share.skipped_starts)} zero-total fee windows skipped")

    num_doc = {
        "alpha": canonical_decimal(numerator.alpha) if numerator.alpha is not None else None,
        "alpha_note": (bundle.numerator_config.note
                       if bundle.numerator_config else None),
        "net_external_value": _figure(numerator.value, grade, coverage.period_label),
        "breakdown": {
            "use_oriented": canonical_decimal(numerator.class_sums[Motive.USE_ORIENTED]),
            "financial_service": canonical_decimal(
                numerator.class_sums[Motive.FINANCIAL_SERVICE]),
            "mixed": canonical_decimal(numerator.class_sums[Motive.MIXED]),
            "mixed_after_haircut": canonical_decimal(numerator.mixed_after_haircut),
            "excluded_investment": canonical_decimal(
                numerator.class_sums[Motive.INVESTMENT_DEPENDENT]),
            "excluded_subsidy": canonical_decimal(
                numerator.class_sums[Motive.SUBSIDY_LOOP]),
            "excluded_unknown": canonical_decimal(numerator.class_sums[Motive.UNKNOWN]),
            "rebates": canonical_decimal(numerator.rebates),
            "emissions": canonical_decimal(numerator.emissions),
            "wash_self_dealing": canonical_decimal(numerator.wash_self_dealing),
        },
        "negative_value_warning": numerator.negative_warning,
        "note": "Route-admissible value is computed from per-flow accepted "
                "amounts; this net figure is a separate screening guardrail.",
    }

    outcome_docs = []
    for o in outcomes:
        doc = {
            "flow_id": o.flow_id,
            "route_id": o.route_id,
            "decision": o.decision.value,
            "reason_codes": [c.value for c in o.reason_codes],
            "narrative": o.narrative,
            "band": canonical_decimal(o.band_e) if o.band_e is not None else None,
        }
        if o.route_id and o.route_id in bands:
            doc["band_rules"] = list(bands[o.route_id].rationale.applied_rules)
        outcome_docs.append(doc)

    row_analytics: dict = {}
    if eth_rows:
        row_analytics["eth_reward_decomposition"] = [
            {
                "window": window,
                "validator_reward": _figure(res.validator_reward, grade,
                                            coverage.period_label),
                "base_fee_burn": _figure(res.base_fee_burn, grade,
                                         coverage.period_label),
            }
            for window, res in eth_rows
        ]
    if fee_share is not None:
        row_analytics["btc_fee_share"] = {
            "window": fee_share.window,
            "max_share": (_figure(fee_share.max_share, grade, coverage.period_label)
                          if fee_share.max_share is not None else None),
            "max_window_start": fee_share.max_window_start,
            "windows_evaluated": len(fee_share.shares),
            "windows_skipped": list(fee_share.skipped_starts),
        }

    document = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "case_id": bundle.case_id,
        "currency": bundle.currency,
        "unit": {
            "id": bundle.unit.id,
            "kind": bundle.unit.kind.value,
            "is_mixed": bundle.unit.is_mixed,
            "boundary_note": bundle.unit.boundary_note,
        },
        "recipient": {
            "id": bundle.recipient.id,
            "recipient_class": bundle.recipient.recipient_class.value,
            "is_specified": bundle.recipient.is_specified,
            "function_note": bundle.recipient.function_note,
        },
        "period": {
            "label": period.label,
            "start": period.start,
            "end": period.end,
            "basis": period.basis.value,
        },
        "coding_trace": list(coding_trace),
        "numerator_guardrail": num_doc,
        "gate_outcomes": outcome_docs,
        "breakpoints": [
            {"code": b.code.value, "justification": [c.value for c in b.justification]}
            for b in breakpoints
        ],
        "b4_dominance_threshold": canonical_decimal(bundle.b4_dominance_threshold),
        "coverage": {
            "rav_weighted": _figure(coverage.rav.rav_weighted, grade,
                                    coverage.period_label),
            "rav_unweighted": _figure(coverage.rav.rav_unweighted, grade,
                                      coverage.period_label),
            "accepted_flow_ids": list(coverage.rav.accepted_flow_ids),
            "denominator": denom_doc,
            "rcr": _rcr_section(coverage, final_verdict, grade),
        },
        "row_analytics": row_analytics,
        "claims": [
            {
                "template": v.request.template.value,
                "level": v.request.level.value,
                "allowed": v.allowed,
                "blocking_reasons": [r.value for r in v.blocking_reasons],
            }
            for v in verdicts
        ],
        "evidence_sources": [
            {
                "id": s.id,
                "grade": s.grade.value,
                "capture_date": s.capture_date,
                "locator": s.locator,
                "fields_and_dates_specified": s.fields_and_dates_specified,
            }
            for s in bundle.sources
        ],
        "flags": {
            "pooled_capture_baseline": pooled_capture,
            "revocable_route_flag": revocable_flag,
            "source_coverage_gap": source_gap_flag,
        },
        "warnings": warnings,
    }
    return CaseReport(document=document)


def _render_text(doc: dict) -> str:
    """Deterministic plain-text rendering of a report document."""
    lines: list[str] = []
    lines.append(f"case: {doc['case_id']}  ({doc['unit']['kind']} unit, "
                 f"recipient class {doc['recipient']['recipient_class']})")
    lines.append(f"period: {doc['period']['label']}  currency: {doc['currency']}")
    lines.append("")
    lines.append("coding trace:")
    for step in doc["coding_trace"]:
        lines.append(f"  {step}")
    lines.append("")
    ng = doc["numerator_guardrail"]
    alpha = ng["alpha"] if ng["alpha"] is not None else "n/a"
    lines.append(f"net external-use value: {ng['net_external_value']['value']} "
                 f"(alpha={alpha})")
    lines.append("")
    lines.append("gate outcomes:")
    for o in doc["gate_outcomes"]:
        band = f" band={o['band']}" if o["band"] is not None else ""
        lines.append(f"  {o['flow_id']}: {o['decision']}{band} "
                     f"[{', '.join(o['reason_codes'])}]")
    lines.append("")
    bps = ", ".join(b["code"] for b in doc["breakpoints"]) or "none"
    lines.append(f"breakpoints: {bps} "
                 f"(B4 dominance threshold {doc['b4_dominance_threshold']})")
    cov = doc["coverage"]
    lines.append(f"RAV weighted: {cov['rav_weighted']['value']}  "
                 f"unweighted: {cov['rav_unweighted']['value']}")
    rcr = cov["rcr"]
    if rcr["status"] == "reported":
        if "value" in rcr:
            lines.append(f"RCR: {rcr['value']}")
        else:
            lines.append(f"RCR: [{rcr['interval_low']}, {rcr['interval_high']}]")
    else:
        lines.append(f"RCR: blocked [{', '.join(rcr['reasons'])}]")
    lines.append("")
    lines.append("claims:")
    for c in doc["claims"]:
        if c["allowed"]:
            lines.append(f"  {c['template']}: allowed ({c['level']})")
        else:
            lines.append(f"  {c['template']}: blocked "
                         f"[{', '.join(c['blocking_reasons'])}]")
    if doc["warnings"]:
        lines.append("")
        lines.append("warnings:")
        for w in doc["warnings"]:
            lines.append(f"  - {w}")
    return "\n".join(lines) + "\n"
