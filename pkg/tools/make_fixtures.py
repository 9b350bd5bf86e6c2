"""Regenerate the shipped case fixtures under cases/.

The case bundles encode the contrast set's coding decisions; the block CSV is
constructed so the middle 144-block window has a 74:26 fee:subsidy mix, and
the snapshots wrap the same rows for replay-mode tests.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
CASES = ROOT / "cases"

FIXED_CAPTURE = "2025-11-14T00:00:00+00:00"


def write_json(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n",
                    encoding="utf-8")


def case_files(name: str, case: dict, flows: list, routes: list, sources: list,
               denominators: list) -> None:
    d = CASES / name
    case = {"schema_version": "evrc-case/1", **case}
    write_json(d / "case.json", case)
    write_json(d / "flows.json", {"schema_version": "evrc-flows/1", "flows": flows})
    write_json(d / "routes.json", {"schema_version": "evrc-routes/1", "routes": routes})
    write_json(d / "sources.json", {"schema_version": "evrc-sources/1", "sources": sources})
    write_json(d / "denominators.json",
               {"schema_version": "evrc-denominators/1", "denominators": denominators})


def flow(fid, amount, motive, landing, *, note="", intended=False, pays=False,
         period="auto", currency="USD", deductions=None, landing_note=""):
    doc = {
        "id": fid, "amount": str(amount), "currency": currency,
        "period_label": period, "motive": motive, "landing": landing,
        "payer_note": note, "intended_numerator": intended, "pays_recipient": pays,
    }
    if landing_note:
        doc["landing_note"] = landing_note
    if deductions:
        doc["deductions"] = {k: str(v) for k, v in deductions.items()}
    return doc


def route(rid, flow_id, recipient_id, kind, enf, ben, rev, aud, *,
          escrowed=False, source_gap=False):
    return {
        "id": rid, "flow_id": flow_id, "recipient_id": recipient_id,
        "route_kind": kind,
        "checks": {"enforceability": enf, "beneficiary_specificity": ben,
                   "revocability": rev, "auditability": aud},
        "escrowed_or_executed": escrowed, "source_gap": source_gap,
    }


def source(sid, grade, locator, fields=True):
    return {"id": sid, "grade": grade, "capture_date": FIXED_CAPTURE,
            "locator": locator, "fields_and_dates_specified": fields}


def wall(label, start, end):
    return {"label": label, "start": start, "end": end, "basis": "wall_clock"}


def set_period(flows, label):
    for f in flows:
        if f["period_label"] == "auto":
            f["period_label"] = label
    return flows


def main() -> None:
    # ------------------------------------------------------------------ youtube
    label = "2024"
    case_files(
        "youtube",
        {
            "case_id": "youtube",
            "currency": "USD",
            "unit": {"id": "youtube-platform", "kind": "company",
                     "boundary_note": "Operating company plus hosted platform; "
                                      "one revenue pool governed by platform rules.",
                     "is_mixed": False},
            "recipient": {"id": "w-creators", "unit_id": "youtube-platform",
                          "recipient_class": "authors_curators",
                          "function_note": "Channel creators producing the content "
                                           "the platform monetizes.",
                          "is_specified": True},
            "periods": [wall(label, "2024-01-01T00:00:00Z", "2025-01-01T00:00:00Z")],
            "analysis_period": label,
        },
        set_period([
            flow("f-ads", "1000000", "U", "app", intended=True,
                 note="Advertiser spend on placements; lands in the platform "
                      "revenue pool."),
        ], label),
        [
            route("r-revshare", "f-ads", "w-creators", "contractual_platform_rule",
                  "yes", "yes", "yes", "yes"),
        ],
        [
            source("s-yt-reports", "G2",
                   "Company financial reporting on ad revenue and creator payouts"),
        ],
        [
            {"recipient_id": "w-creators", "period_label": label,
             "status": "measured", "value": "1200000",
             "source_ids": ["s-yt-reports"]},
        ],
    )

    # ------------------------------------------------------------------ steem
    label = "2017-2019"
    case_files(
        "steem",
        {
            "case_id": "steem",
            "currency": "USD",
            "unit": {"id": "steem-ecosystem", "kind": "composite",
                     "boundary_note": "Front-end company plus blockchain protocol, "
                                      "analyzed together to expose the routing "
                                      "boundary between them.",
                     "is_mixed": False},
            "recipient": {"id": "w-authors", "unit_id": "steem-ecosystem",
                          "recipient_class": "authors_curators",
                          "function_note": "Authors, curators and witnesses paid "
                                           "from the protocol reward pool.",
                          "is_specified": True},
            "periods": [wall(label, "2017-01-01T00:00:00Z", "2020-01-01T00:00:00Z")],
            "analysis_period": label,
        },
        set_period([
            flow("f-ads", "250000", "U", "app", intended=True,
                 note="Advertising and company finance activity at the front-end "
                      "layer; no binding route to the reward pool identified in "
                      "captured sources."),
            flow("f-token-sales", "400000", "I", "secondary_market",
                 note="Company token sales into the market; market absorption, "
                      "not external service payment."),
            flow("f-reward-pool", "800000", "S", "new_issuance", pays=True,
                 note="Protocol reward pool distributions to authors, curators "
                      "and witnesses, funded by issuance rules."),
        ], label),
        [],
        [
            source("s-steem-chain", "G1",
                   "On-chain reward fund and witness schedule observability"),
            source("s-steemit-updates", "G2",
                   "Company updates on token sales, cost reductions and "
                   "advertising activity"),
            source("s-media", "G3", "Press coverage of the platform era",
                   fields=False),
        ],
        [
            {"recipient_id": "w-authors", "period_label": label,
             "status": "unavailable",
             "source_ids": ["s-steem-chain"]},
        ],
    )

    # ------------------------------------------------------------------ bitcoin
    label = "halving-2024"
    case_files(
        "bitcoin",
        {
            "case_id": "bitcoin",
            "currency": "USD",
            "unit": {"id": "bitcoin", "kind": "chain",
                     "boundary_note": "Base-layer chain; miners as the critical "
                                      "incentive layer.",
                     "is_mixed": False},
            "recipient": {"id": "w-miners", "unit_id": "bitcoin",
                          "recipient_class": "miners",
                          "function_note": "Proof-of-work miners securing the chain.",
                          "is_specified": True},
            "periods": [{"label": label, "start": 839928, "end": 840216,
                         "basis": "block_height"}],
            "analysis_period": label,
            "row_files": [{"path": "rows/blocks.csv", "kind": "btc_blocks",
                           "grade": "G2", "source_id": "s-mempool"}],
            "feeshare_window": 144,
        },
        set_period([
            flow("f-fees", "74000000", "U", "protocol", intended=True,
                 note="Transaction fees paid by users over the stress window."),
            flow("f-subsidy", "26000000", "S", "new_issuance", pays=True,
                 note="Block subsidy: newly issued coins to miners."),
        ], label),
        [
            route("r-coinbase-fees", "f-fees", "w-miners", "protocol_enforced",
                  "yes", "yes", "no", "yes"),
        ],
        [
            source("s-mempool", "G2",
                   "Block explorer fee/subsidy rows captured around the 2024 "
                   "halving"),
        ],
        [
            {"recipient_id": "w-miners", "period_label": label,
             "status": "measured", "value": "100000000",
             "source_ids": ["s-mempool"]},
        ],
    )

    # ------------------------------------------------------------------ ethereum
    label = "window-2024"
    case_files(
        "ethereum",
        {
            "case_id": "ethereum",
            "currency": "USD",
            "unit": {"id": "ethereum-l1", "kind": "chain",
                     "boundary_note": "Base layer only; rollups and L2 sequencers "
                                      "out of boundary.",
                     "is_mixed": False},
            "recipient": {"id": "w-validators", "unit_id": "ethereum-l1",
                          "recipient_class": "validators",
                          "function_note": "Proof-of-stake validators/proposers.",
                          "is_specified": True},
            "periods": [wall(label, "2024-05-01T00:00:00Z", "2024-06-01T00:00:00Z")],
            "analysis_period": label,
            "row_files": [{"path": "rows/eth_rewards.csv", "kind": "eth_rewards",
                           "grade": "G2", "source_id": "s-eth-docs"}],
        },
        set_period([
            flow("f-tips", "15000000", "U", "protocol", intended=True,
                 note="Priority fees paid by users to proposers."),
            flow("f-mev", "8000000", "F", "protocol",
                 note="Proposer MEV payments via relays."),
            flow("f-base-burn", "30000000", "U", "burn",
                 note="Base fees burned; kept separate from validator rewards."),
            flow("f-issuance", "15000000", "S", "new_issuance", pays=True,
                 note="Consensus issuance to validators."),
        ], label),
        [
            route("r-tips", "f-tips", "w-validators", "protocol_enforced",
                  "yes", "yes", "no", "yes"),
            route("r-mev", "f-mev", "w-validators", "contractual_platform_rule",
                  "yes", "yes", "yes", "yes"),
        ],
        [
            source("s-eth-docs", "G2",
                   "Fee-market and issuance documentation plus dashboard rows "
                   "for the window"),
        ],
        [
            {"recipient_id": "w-validators", "period_label": label,
             "status": "unavailable",
             "source_ids": ["s-eth-docs"]},
        ],
    )

    # ------------------------------------------------------------------ aave
    label = "2024"
    case_files(
        "aave",
        {
            "case_id": "aave",
            "currency": "USD",
            "unit": {"id": "aave-v3", "kind": "protocol",
                     "boundary_note": "Lending protocol contracts; the token and "
                                      "DAO treasury sit at the boundary.",
                     "is_mixed": False},
            "recipient": {"id": "w-suppliers", "unit_id": "aave-v3",
                          "recipient_class": "suppliers_risk_layers",
                          "function_note": "Liquidity suppliers and risk-bearing "
                                           "layers.",
                          "is_specified": True},
            "periods": [wall(label, "2024-01-01T00:00:00Z", "2025-01-01T00:00:00Z")],
            "analysis_period": label,
            "numerator": {"alpha": "0.5",
                          "note": "Half haircut for fee activity plausibly driven "
                                  "by incentive programs rather than service "
                                  "demand."},
        },
        set_period([
            flow("f-interest", "30000000", "F", "protocol", intended=True,
                 note="Borrower interest routed to suppliers by the pool "
                      "contracts."),
            flow("f-mixed-fees", "10000000", "M", "treasury", intended=True,
                 note="Protocol fee revenue partly attributable to "
                      "incentive-driven usage; lands in the treasury."),
        ], label),
        [
            route("r-pool", "f-interest", "w-suppliers", "protocol_enforced",
                  "yes", "yes", "yes", "yes"),
            route("r-treasury", "f-mixed-fees", "w-suppliers",
                  "governance_mediated", "yes", "no", "yes", "yes"),
        ],
        [
            source("s-defillama", "G2",
                   "Aggregate fee/revenue rows for the protocol and period"),
            source("s-aave-docs", "G2", "Protocol documentation of fee routing"),
        ],
        [
            {"recipient_id": "w-suppliers", "period_label": label,
             "status": "bounded", "bound_low": "40000000",
             "bound_high": "60000000", "source_ids": ["s-defillama"]},
        ],
    )

    # ------------------------------------------------------------------ filecoin
    label = "2024"
    case_files(
        "filecoin",
        {
            "case_id": "filecoin",
            "currency": "USD",
            "unit": {"id": "filecoin", "kind": "protocol",
                     "boundary_note": "Storage network and its built-in storage "
                                      "market.",
                     "is_mixed": False},
            "recipient": {"id": "w-providers", "unit_id": "filecoin",
                          "recipient_class": "storage_providers",
                          "function_note": "Storage providers serving paid deals.",
                          "is_specified": True},
            "periods": [wall(label, "2024-01-01T00:00:00Z", "2025-01-01T00:00:00Z")],
            "analysis_period": label,
        },
        set_period([
            flow("f-deal-fees", "5000000", "U", "protocol", intended=True,
                 note="Candidate paid storage-deal fees; amounts not extractable "
                      "from captured sources."),
            flow("f-block-rewards", "40000000", "S", "new_issuance", pays=True,
                 note="Block rewards to providers, funded by issuance."),
        ], label),
        [
            route("r-market", "f-deal-fees", "w-providers", "protocol_enforced",
                  "unknown", "unknown", "unknown", "unknown", source_gap=True),
        ],
        [
            source("s-fil-code", "G1",
                   "Storage-market actor code distinguishing clients, providers, "
                   "fees and rewards"),
            source("s-spacescope", "G2", "Network dashboards for provider rows"),
        ],
        [
            {"recipient_id": "w-providers", "period_label": label,
             "status": "unavailable",
             "source_ids": ["s-spacescope"]},
        ],
    )

    # ------------------------------------------------------------------ usdc
    label = "2024"
    case_files(
        "usdc",
        {
            "case_id": "usdc",
            "currency": "USD",
            "unit": {"id": "circle-usdc", "kind": "issuer",
                     "boundary_note": "Issuer boundary: reserves and redemption; "
                                      "host chains excluded.",
                     "is_mixed": False},
            "recipient": {"id": "w-issuer-ops", "unit_id": "circle-usdc",
                          "recipient_class": "issuer_operators",
                          "function_note": "Issuer operations sustaining reserve "
                                           "backing and redemption.",
                          "is_specified": True},
            "periods": [wall(label, "2024-01-01T00:00:00Z", "2025-01-01T00:00:00Z")],
            "analysis_period": label,
        },
        set_period([
            flow("f-reserve-yield", "200000000", "F", "issuer_balance_sheet",
                 intended=True,
                 note="Reserve interest income funding issuer operations."),
        ], label),
        [
            route("r-ops", "f-reserve-yield", "w-issuer-ops",
                  "contractual_platform_rule", "yes", "yes", "yes", "yes"),
        ],
        [
            source("s-attest", "G1", "Audited reserve attestations"),
            source("s-circle-docs", "G2", "Issuer transparency documentation"),
        ],
        [
            {"recipient_id": "w-issuer-ops", "period_label": label,
             "status": "measured", "value": "150000000",
             "source_ids": ["s-attest"]},
        ],
    )

    # ------------------------------------------------------------------ xrp
    label = "2024"
    case_files(
        "xrp",
        {
            "case_id": "xrp",
            "currency": "USD",
            "unit": {"id": "xrpl", "kind": "chain",
                     "boundary_note": "Ledger with burned transaction costs.",
                     "is_mixed": False},
            "recipient": {"id": "w-validators", "unit_id": "xrpl",
                          "recipient_class": "validators",
                          "function_note": "Validators running consensus without "
                                           "a fee reward route.",
                          "is_specified": True},
            "periods": [wall(label, "2024-01-01T00:00:00Z", "2025-01-01T00:00:00Z")],
            "analysis_period": label,
        },
        set_period([
            flow("f-txcost", "3000000", "U", "burn", intended=True,
                 note="Transaction costs burned by the ledger; offered (and "
                      "rejected) as validator coverage to code the boundary."),
        ], label),
        [],
        [
            source("s-xrpl-code", "G1", "Ledger code burning transaction costs"),
            source("s-xrpl-docs", "G2",
                   "Transaction-cost and validator-incentive documentation"),
        ],
        [
            {"recipient_id": "w-validators", "period_label": label,
             "status": "unavailable",
             "source_ids": ["s-xrpl-docs"]},
        ],
    )

    # ------------------------------------------------------------ row files
    rows_dir = CASES / "bitcoin" / "rows"
    rows_dir.mkdir(parents=True, exist_ok=True)
    lines = ["height,fees,subsidy"]
    block_rows = []
    for h in range(839928, 840216):
        if 840000 <= h <= 840143:
            fees, subsidy = "74", "26"
        else:
            fees, subsidy = "1", "99"
        lines.append(f"{h},{fees},{subsidy}")
        block_rows.append({"height": h, "fees": fees, "subsidy": subsidy})
    (rows_dir / "blocks.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    eth_dir = CASES / "ethereum" / "rows"
    eth_dir.mkdir(parents=True, exist_ok=True)
    (eth_dir / "eth_rewards.csv").write_text(
        "window,priority_fees_to_proposer,proposer_mev,consensus_issuance,"
        "penalties_slashing,base_fee_burn\n"
        "w1,10,5,100,2,500\n"
        "w2,12,6,100,3,600\n",
        encoding="utf-8")

    # ------------------------------------------------------------ snapshots
    def snapshot(path: Path, adapter_id: str, request: dict, payload_obj) -> None:
        payload = json.dumps(payload_obj, separators=(",", ":"))
        digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()
        write_json(path, {
            "schema_version": "evrc-snapshot/1",
            "adapter_id": adapter_id,
            "request": request,
            "captured_at": FIXED_CAPTURE,
            "digest": digest,
            "grade": "G2",
            "row_count": len(payload_obj),
            "payload": payload,
        })

    snapshot(CASES / "bitcoin" / "snapshots" / "btc_blocks_blocks_839928_840215.json",
             "btc_blocks", {"kind": "blocks", "start": 839928, "end": 840215},
             block_rows)
    snapshot(CASES / "aave" / "snapshots" / "defillama_fees_aave_2024.json",
             "defillama", {"kind": "fees", "protocol": "aave", "period": "2024"},
             [{"period": "2024", "fees": "42000000", "revenue": "9000000"}])

    print("fixtures written under", CASES)


if __name__ == "__main__":
    main()
