#!/usr/bin/env python3
"""Solve for the frozen constants in ksdiag.simulate's built-in scenarios.

The score generator draws goods from N(offset, 1) and bads from
N(offset + sep, 1) within each segment, so every aggregate KS has a
closed-form population value: the sup over t of the difference between
two Gaussian-mixture CDFs. This script inverts that oracle to find the
segment mean offsets / bad rates (mix scenarios) and the stratum
separations (covariate-shift scenario) that place the population KS at
the documented target levels, then prints the constants that are
frozen into ksdiag/simulate.py.

Requires scipy (solver only; the package itself does not depend on it).
Re-run after changing targets: python scripts/calibrate_builtin_scenarios.py
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq, least_squares
from scipy.stats import norm


def mixture_ks(strata_goods: list[tuple[float, float]], strata_bads: list[tuple[float, float]]) -> float:
    """sup_t |F1 - F0| for unit-variance Gaussian mixtures.

    Each stratum is (weight, mean); weights sum to 1 per class.
    """
    means = [m for _, m in strata_goods] + [m for _, m in strata_bads]
    lo, hi = min(means) - 8.0, max(means) + 8.0
    grid = np.linspace(lo, hi, 20001)

    def diff(t: np.ndarray) -> np.ndarray:
        f0 = sum(w * norm.cdf(t - m) for w, m in strata_goods)
        f1 = sum(w * norm.cdf(t - m) for w, m in strata_bads)
        return np.abs(f1 - f0)

    coarse = diff(grid)
    i = int(np.argmax(coarse))
    fine = np.linspace(grid[max(i - 2, 0)], grid[min(i + 2, grid.size - 1)], 40001)
    return float(np.max(diff(fine)))


def segment_mixture_ks(segments: list[dict], period: str) -> float:
    """Population KS for one period of a segment-mixture scenario.

    Segment dict keys: share_ref/share_cur, sep_ref/sep_cur, offset, bad_rate.
    Class stratum weights follow from share * rate (bads) / share * (1-rate).
    """
    rows = [s for s in segments if s.get(f"share_{period}") is not None]
    goods_mass = sum(s[f"share_{period}"] * (1 - s["bad_rate"]) for s in rows)
    bads_mass = sum(s[f"share_{period}"] * s["bad_rate"] for s in rows)
    goods = [(s[f"share_{period}"] * (1 - s["bad_rate"]) / goods_mass, s["offset"]) for s in rows]
    bads = [(s[f"share_{period}"] * s["bad_rate"] / bads_mass, s["offset"] + s[f"sep_{period}"]) for s in rows]
    return mixture_ks(goods, bads)


def solve_s2a() -> tuple[float, float]:
    """Offset and bad rate of segment B hitting KS 0.598 -> 0.458."""

    def residuals(params: np.ndarray) -> list[float]:
        offset_b, rate_b = params
        segments = [
            dict(share_ref=0.7, share_cur=0.3, sep_ref=2.5, sep_cur=2.5, offset=0.0, bad_rate=0.3),
            dict(share_ref=0.3, share_cur=0.7, sep_ref=1.0, sep_cur=1.0, offset=offset_b, bad_rate=rate_b),
        ]
        return [
            segment_mixture_ks(segments, "ref") - 0.598,
            segment_mixture_ks(segments, "cur") - 0.458,
        ]

    fit = least_squares(residuals, x0=[-0.5, 0.3], bounds=([-4.0, 0.05], [4.0, 0.95]))
    assert fit.cost < 1e-10, fit
    return float(fit.x[0]), float(fit.x[1])


def solve_s2b() -> tuple[float, float]:
    """Offsets for exiting segment C (ref KS 0.689) and entering
    segment D (cur KS 0.550); segment E stays at offset 0."""

    def ref_ks(offset_c: float) -> float:
        segments = [
            dict(share_ref=0.4, share_cur=None, sep_ref=2.5, sep_cur=None, offset=offset_c, bad_rate=0.3),
            dict(share_ref=0.6, share_cur=0.7, sep_ref=2.0, sep_cur=2.0, offset=0.0, bad_rate=0.3),
        ]
        return segment_mixture_ks(segments, "ref")

    def cur_ks(offset_d: float) -> float:
        segments = [
            dict(share_ref=None, share_cur=0.3, sep_ref=None, sep_cur=1.2, offset=offset_d, bad_rate=0.3),
            dict(share_ref=0.6, share_cur=0.7, sep_ref=2.0, sep_cur=2.0, offset=0.0, bad_rate=0.3),
        ]
        return segment_mixture_ks(segments, "cur")

    offset_c = brentq(lambda m: ref_ks(m) - 0.689, -6.0, 0.0, xtol=1e-10)
    offset_d = brentq(lambda m: cur_ks(m) - 0.550, -6.0, 0.0, xtol=1e-10)
    return float(offset_c), float(offset_d)


def solve_s3a() -> tuple[float, float]:
    """Stratum separations for the covariate-shift scenario.

    The covariate is x ~ N(mu_p, 1) with P(x > 0) = 0.35 (ref) and
    0.75 (cur); goods score N(0,1) in both strata, bads score mean
    sep_lo below / sep_hi above x = 0. Targets: KS 0.513 -> 0.215.
    """

    def ks_for(share_high: float, sep_lo: float, sep_hi: float) -> float:
        goods = [(1 - share_high, 0.0), (share_high, 0.0)]
        bads = [(1 - share_high, sep_lo), (share_high, sep_hi)]
        return mixture_ks(goods, bads)

    def residuals(params: np.ndarray) -> list[float]:
        sep_lo, sep_hi = params
        return [
            ks_for(0.35, sep_lo, sep_hi) - 0.513,
            ks_for(0.75, sep_lo, sep_hi) - 0.215,
        ]

    fit = least_squares(residuals, x0=[2.6, 0.8], bounds=([0.0, 0.0], [6.0, 6.0]))
    assert fit.cost < 1e-10, fit
    return float(fit.x[0]), float(fit.x[1])


def pair_sep_for_ks(ks: float) -> float:
    """Invert KS = 2*Phi(sep/2) - 1 for a single two-Gaussian pair."""
    return float(2.0 * norm.ppf((1.0 + ks) / 2.0))


def main() -> None:
    offset_b, rate_b = solve_s2a()
    print(f"S2_A: segment B offset = {offset_b:.6f}, bad rate = {rate_b:.6f}")
    segs = [
        dict(share_ref=0.7, share_cur=0.3, sep_ref=2.5, sep_cur=2.5, offset=0.0, bad_rate=0.3),
        dict(share_ref=0.3, share_cur=0.7, sep_ref=1.0, sep_cur=1.0, offset=offset_b, bad_rate=rate_b),
    ]
    print(f"      check: ref {segment_mixture_ks(segs, 'ref'):.4f}  cur {segment_mixture_ks(segs, 'cur'):.4f}")

    offset_c, offset_d = solve_s2b()
    print(f"S2_B: segment C offset = {offset_c:.6f}, segment D offset = {offset_d:.6f}")
    segs = [
        dict(share_ref=0.4, share_cur=None, sep_ref=2.5, sep_cur=None, offset=offset_c, bad_rate=0.3),
        dict(share_ref=None, share_cur=0.3, sep_ref=None, sep_cur=1.2, offset=offset_d, bad_rate=0.3),
        dict(share_ref=0.6, share_cur=0.7, sep_ref=2.0, sep_cur=2.0, offset=0.0, bad_rate=0.3),
    ]
    print(f"      check: ref {segment_mixture_ks(segs, 'ref'):.4f}  cur {segment_mixture_ks(segs, 'cur'):.4f}")

    sep_lo, sep_hi = solve_s3a()
    print(f"S3_A: stratum separations low = {sep_lo:.6f}, high = {sep_hi:.6f}")
    print(f"      domain-classifier population AUROC = {norm.cdf((norm.ppf(0.75) - norm.ppf(0.35)) / np.sqrt(2)):.4f}")

    print(f"S3_B: sep_ref = {pair_sep_for_ks(0.746):.6f} (KS 0.746), sep_cur = {pair_sep_for_ks(0.273):.6f} (KS 0.273)")

    for pct in (-0.05, -0.10, -0.205, -0.40):
        ks_ref = 2 * norm.cdf(1.0) - 1  # sep 2.0
        print(f"STEP1 pct {pct:+.3f}: sep_cur = {pair_sep_for_ks(ks_ref * (1 + pct)):.6f}")


if __name__ == "__main__":
    main()
