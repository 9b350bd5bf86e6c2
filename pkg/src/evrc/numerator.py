"""Screening guardrail for the external-use numerator.

Computes the net external-use value (use payments plus financial-service
payments plus a disclosed haircut of mixed payments, minus rebates, emissions
and wash/self-dealing) and the per-class breakdown. This figure is a coding
guardrail: route-admissible value is computed from per-flow amounts, not from
this total, and reports carry both.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from enum import Enum

from .core_model import Motive, NumeratorConfig, ValueFlow
from .errors import ConfigurationError, InputError

__all__ = ["NumeratorConfig", "MotiveScreen", "NumeratorResult",
           "screen_motive", "net_external_value"]


class MotiveScreen(str, Enum):
    COUNTS_FULL = "counts_full"
    COUNTS_HAIRCUT = "counts_haircut"
    EXCLUDED = "excluded"


def screen_motive(flow: ValueFlow) -> MotiveScreen:
    """Screen one flow's motive: full for U/F, haircut for M, excluded for I/S/X."""
    if flow.motive in (Motive.USE_ORIENTED, Motive.FINANCIAL_SERVICE):
        return MotiveScreen.COUNTS_FULL
    if flow.motive is Motive.MIXED:
        return MotiveScreen.COUNTS_HAIRCUT
    return MotiveScreen.EXCLUDED


@dataclass(frozen=True)
class NumeratorResult:
    value: Decimal
    alpha: Decimal | None
    class_sums: dict[Motive, Decimal]
    mixed_after_haircut: Decimal
    rebates: Decimal
    emissions: Decimal
    wash_self_dealing: Decimal
    negative_warning: bool

    @property
    def excluded_mass(self) -> Decimal:
        return (self.class_sums[Motive.INVESTMENT_DEPENDENT]
                + self.class_sums[Motive.SUBSIDY_LOOP]
                + self.class_sums[Motive.UNKNOWN])


def net_external_value(flows: list[ValueFlow] | tuple[ValueFlow, ...],
                       config: NumeratorConfig | None) -> NumeratorResult:
    """Compute the net external-use value and its breakdown.

    The haircut alpha is mandatory (with a written note) whenever mixed-motive
    flows are present; the engine never applies a silent default. Negative
    totals are reported with a warning, never clamped.
    """
    currencies = {f.currency for f in flows}
    if len(currencies) > 1:
        raise InputError(f"flows mix currencies: {sorted(currencies)}")

    class_sums = {m: Decimal(0) for m in Motive}
    rebates = emissions = wash = Decimal(0)
    for f in flows:
        class_sums[f.motive] += f.amount
        rebates += f.deductions.rebates
        emissions += f.deductions.emissions
        wash += f.deductions.wash_self_dealing

    alpha: Decimal | None = None
    if config is not None:
        alpha = config.alpha
        if not (0 <= alpha <= 1):
            raise ConfigurationError(f"alpha must be in [0, 1], got {alpha}")
        if not config.note.strip():
            raise ConfigurationError("alpha requires a written justification note")
    elif class_sums[Motive.MIXED] != 0:
        raise ConfigurationError(
            "mixed-motive flows are present but no disclosed alpha was configured")

    mixed_term = class_sums[Motive.MIXED] * alpha if alpha is not None else Decimal(0)
    value = (class_sums[Motive.USE_ORIENTED]
             + class_sums[Motive.FINANCIAL_SERVICE]
             + mixed_term
             - rebates - emissions - wash)

    return NumeratorResult(
        value=value,
        alpha=alpha,
        class_sums=class_sums,
        mixed_after_haircut=mixed_term,
        rebates=rebates,
        emissions=emissions,
        wash_self_dealing=wash,
        negative_warning=value < 0,
    )
