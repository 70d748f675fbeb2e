"""Run-level bookkeeping and report rendering.

The structured format is a single flat JSON object tagged with a version
field so downstream tooling can sanity-check what it parses; the text format
is a fixed-width table with four decimal places.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .fock import FockDiagonal, InvalidParameter

REPORT_VERSION = "fockscope-report/1"
CONTAMINATION_N_MAX = 40


class UnidentifiableParameter(ValueError):
    pass


class ReportFormatError(ValueError):
    pass


@dataclass(frozen=True)
class RunSummary:
    rep_rate: float
    trigger_rate: float
    p_t: float
    eta_t: float
    state: FockDiagonal
    sigma: tuple
    eta: float
    gamma_sq: float
    fidelity: float
    contamination: float

    def __post_init__(self):
        if self.rep_rate <= 0:
            raise InvalidParameter("rep_rate must be positive")
        if abs(self.p_t * self.rep_rate - self.trigger_rate) > 1e-12 * max(self.trigger_rate, 1.0):
            raise InvalidParameter("p_t inconsistent with trigger_rate / rep_rate")
        if not 0.0 <= self.contamination <= 1.0:
            raise InvalidParameter("contamination must be in [0, 1]")
        object.__setattr__(self, "sigma", tuple(float(s) for s in self.sigma))


def trigger_bookkeeping(trigger_rate: float, rep_rate: float, gamma_sq: float):
    """Per-pulse herald probability and trigger efficiency from the count rates."""
    if rep_rate <= 0 or trigger_rate < 0:
        raise InvalidParameter("rates must be positive")
    if trigger_rate >= rep_rate:
        raise InvalidParameter("trigger rate cannot exceed the pulse rate")
    if gamma_sq <= 0:
        raise UnidentifiableParameter("eta_t is unidentifiable with gamma_sq = 0")
    p_t = trigger_rate / rep_rate
    if p_t == 0.0:
        raise UnidentifiableParameter("eta_t is unidentifiable with no trigger events")
    return p_t, p_t / gamma_sq


def contamination_fraction(gamma_sq: float, eta_t: float) -> float:
    """Fraction of herald events caused by two or more photon pairs."""
    if gamma_sq < 0 or not 0.0 <= eta_t <= 1.0:
        raise InvalidParameter("invalid source parameters")
    if gamma_sq == 0.0:
        return 0.0
    n = np.arange(CONTAMINATION_N_MAX + 1, dtype=np.float64)
    p = gamma_sq ** n
    if eta_t == 0.0:
        w = n * p  # weak-trigger limit of 1 - (1 - eta_t)^n
    else:
        w = p * (1.0 - (1.0 - eta_t) ** n)
    return float(w[2:].sum() / w[1:].sum())


def summarize(
    state: FockDiagonal,
    sigma,
    eta: float,
    gamma_sq: float,
    eta_t: float,
    rep_rate: float = 76e6,
) -> RunSummary:
    """Assemble a RunSummary with the trigger arithmetic filled in."""
    p_t = eta_t * gamma_sq
    return RunSummary(
        rep_rate=rep_rate,
        trigger_rate=p_t * rep_rate,
        p_t=p_t,
        eta_t=eta_t,
        state=state,
        sigma=tuple(sigma),
        eta=eta,
        gamma_sq=gamma_sq,
        fidelity=float(state.probs[1]),
        contamination=contamination_fraction(gamma_sq, eta_t),
    )


def render_report(summary: RunSummary, format: str = "text") -> str:
    if format == "structured":
        doc = {
            "version": REPORT_VERSION,
            "rep_rate_hz": summary.rep_rate,
            "trigger_rate_hz": summary.trigger_rate,
            "p_t": summary.p_t,
            "eta_t": summary.eta_t,
            "diagonals": [float(p) for p in summary.state.probs],
            "sigmas": list(summary.sigma),
            "eta": summary.eta,
            "gamma_sq": summary.gamma_sq,
            "fidelity": summary.fidelity,
            "contamination": summary.contamination,
        }
        return json.dumps(doc, separators=(", ", ": "))
    if format != "text":
        raise InvalidParameter(f"unknown format {format!r}")

    lines = ["heralded photon run summary", "-" * 27]
    have_sigma = len(summary.sigma) > 0
    for n, p in enumerate(summary.state.probs):
        if have_sigma and n < len(summary.sigma):
            lines.append(f"rho_{n}{n}          {p:8.4f} +- {summary.sigma[n]:.4f}")
        else:
            lines.append(f"rho_{n}{n}          {p:8.4f}")
    lines.append(f"eta             {summary.eta:8.4f}")
    lines.append(f"gamma^2         {summary.gamma_sq:8.4f}")
    lines.append(f"fidelity        {summary.fidelity:8.4f}")
    lines.append(f"p_t             {summary.p_t:.4e}")
    lines.append(f"eta_t           {summary.eta_t:8.4f}")
    lines.append(f"contamination   {summary.contamination:8.4f}")
    lines.append(f"trigger rate    {summary.trigger_rate:12.1f} Hz")
    lines.append(f"rep rate        {summary.rep_rate:12.1f} Hz")
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> RunSummary:
    """Parse a structured report back into an equal RunSummary."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ReportFormatError(f"not valid structured text: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("version") != REPORT_VERSION:
        raise ReportFormatError(f"expected version {REPORT_VERSION!r}")
    return RunSummary(
        rep_rate=doc["rep_rate_hz"],
        trigger_rate=doc["trigger_rate_hz"],
        p_t=doc["p_t"],
        eta_t=doc["eta_t"],
        state=FockDiagonal(np.array(doc["diagonals"])),
        sigma=tuple(doc["sigmas"]),
        eta=doc["eta"],
        gamma_sq=doc["gamma_sq"],
        fidelity=doc["fidelity"],
        contamination=doc["contamination"],
    )
