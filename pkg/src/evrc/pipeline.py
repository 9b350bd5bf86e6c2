"""End-to-end case pipeline in the fixed coding order.

Runs: validation, motive screen and numerator guardrail, band derivation,
per-flow admissibility, coverage (admissibility always precedes coverage),
breakpoint classification, claim gates, report rendering. The eight-step
trace mirrors the coding order so an auditor can confirm ordering.
"""

from __future__ import annotations

from dataclasses import dataclass

from .admissibility import BandAssignment, admit_flow, assign_band, classify_breakpoints
from .claims import CaseReport, ClaimVerdict, gate_all_claims, render_report
from .core_model import (
    Breakpoint,
    CaseBundle,
    GateDecision,
    GateOutcome,
    Landing,
    Motive,
    canonical_decimal,
    validate_bundle,
)
from .coverage import CoverageResult, FeeShareResult, btc_fee_share, \
    coverage_for_bundle, eth_validator_reward
from .errors import ConfigurationError, ValidationFailure
from .numerator import NumeratorResult, net_external_value

DEFAULT_FEESHARE_WINDOW = 144


@dataclass(frozen=True)
class PipelineResult:
    bundle: CaseBundle
    bands: dict[str, BandAssignment]
    numerator: NumeratorResult
    outcomes: tuple[GateOutcome, ...]
    coverage: CoverageResult
    breakpoints: tuple[Breakpoint, ...]
    verdicts: tuple[ClaimVerdict, ...]
    report: CaseReport
    trace: tuple[str, ...]


def check_configuration(bundle: CaseBundle) -> None:
    """Raise when required configuration is missing (mixed flows need alpha)."""
    has_mixed = any(f.motive is Motive.MIXED for f in bundle.flows)
    if has_mixed and bundle.numerator_config is None:
        raise ConfigurationError(
            "mixed-motive flows are present but no disclosed alpha was configured")


def run_case(bundle: CaseBundle) -> PipelineResult:
    """Execute the full coding order on a validated bundle."""
    violations = validate_bundle(bundle)
    if violations:
        raise ValidationFailure(violations)
    check_configuration(bundle)

    motive_counts = {m: 0 for m in Motive}
    landing_counts = {l: 0 for l in Landing}
    for f in bundle.flows:
        motive_counts[f.motive] += 1
        landing_counts[f.landing] += 1

    numerator = net_external_value(bundle.flows, bundle.numerator_config)

    bands = {r.id: assign_band(r) for r in bundle.routes}

    period_label = bundle.analysis_period_label
    outcomes = tuple(
        admit_flow(
            f, bundle.route_for_flow(f.id), bundle.recipient, bundle.unit,
            band=bands.get(bundle.route_for_flow(f.id).id)
            if bundle.route_for_flow(f.id) else None,
            case_period_label=period_label,
        )
        for f in bundle.flows
    )

    coverage = coverage_for_bundle(bundle, outcomes)
    breakpoints = classify_breakpoints(bundle, outcomes)
    verdicts = gate_all_claims(bundle, outcomes, coverage, breakpoints, bands)

    eth_rows = [(row.window, eth_validator_reward(row))
                for row in bundle.eth_reward_rows]
    fee_share: FeeShareResult | None = None
    if bundle.block_rows:
        # An explicit window is honored (and may fail loudly); the default
        # adapts to short row sets.
        window = bundle.feeshare_window or min(DEFAULT_FEESHARE_WINDOW,
                                               len(bundle.block_rows))
        fee_share = btc_fee_share(bundle.block_rows, window)

    accepted = sum(1 for o in outcomes if o.decision is GateDecision.ACCEPTED)
    rejected = sum(1 for o in outcomes if o.decision is GateDecision.REJECTED)
    blocked = sum(1 for o in outcomes if o.decision is GateDecision.SOURCE_BLOCKED)
    allowed_claims = sum(1 for v in verdicts if v.allowed)
    bp_list = ",".join(b.code.value for b in breakpoints) or "none"
    motive_summary = " ".join(f"{m.value}={motive_counts[m]}" for m in Motive)
    landing_summary = " ".join(
        f"{l.value}={landing_counts[l]}" for l in Landing if landing_counts[l])
    best = bundle.best_evidence_grade()

    trace = (
        f"1. analysis unit: {bundle.unit.id} ({bundle.unit.kind.value}"
        f"{', mixed' if bundle.unit.is_mixed else ''})",
        f"2. critical recipient: {bundle.recipient.id} "
        f"({bundle.recipient.recipient_class.value}"
        f"{'' if bundle.recipient.is_specified else ', unspecified'})",
        f"3. payment motives screened: {motive_summary}; net external value "
        f"{canonical_decimal(numerator.value)}",
        f"4. value landing recorded: {landing_summary or 'none'}",
        f"5. route bands assigned: {len(bands)} route(s)",
        f"6. route admissibility decided: accepted={accepted} rejected={rejected} "
        f"source_blocked={blocked}",
        f"7. reward denominator {coverage.denominator.status.value}; coverage "
        f"computed (RAV weighted {canonical_decimal(coverage.rav.rav_weighted)})",
        f"8. evidence graded (best={best.value if best else 'none'}); breakpoints="
        f"{bp_list}; claims allowed={allowed_claims} "
        f"blocked={len(verdicts) - allowed_claims}",
    )

    report = render_report(bundle, outcomes, coverage, breakpoints, verdicts,
                           numerator, bands, list(trace),
                           eth_rows=eth_rows, fee_share=fee_share)
    return PipelineResult(bundle=bundle, bands=bands, numerator=numerator,
                          outcomes=outcomes, coverage=coverage,
                          breakpoints=breakpoints, verdicts=verdicts,
                          report=report, trace=trace)
