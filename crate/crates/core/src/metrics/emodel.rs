//! Simplified ITU-T G.107 E-model: transmission rating R from packet loss
//! and one-way delay, and the R to MOS mapping.

use std::fmt;

use serde::{Deserialize, Serialize};

/// E-model constants. Defaults are the recommendation's default values with
/// G.729A under random loss.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EModelParams {
    /// Basic signal-to-noise rating R0.
    pub r0: f64,
    /// Simultaneous impairment Is.
    pub is_impairment: f64,
    /// Advantage factor A.
    pub advantage: f64,
    /// Codec equipment impairment Ie.
    pub ie: f64,
    /// Packet-loss robustness Bpl.
    pub bpl: f64,
    /// Encoding, packetization and jitter-buffer delay added in the pipeline.
    pub codec_delay_ms: f64,
}

impl Default for EModelParams {
    fn default() -> Self {
        EModelParams { r0: 93.2, is_impairment: 0.0, advantage: 0.0, ie: 11.0, bpl: 19.0, codec_delay_ms: 25.0 }
    }
}

impl EModelParams {
    pub fn check(&self) -> Result<(), String> {
        if !(self.r0 > 0.0 && self.r0 <= 100.0) {
            return Err(format!("r0 must be in (0, 100], got {}", self.r0));
        }
        if !(self.ie >= 0.0 && self.ie < 95.0) {
            return Err(format!("ie must be in [0, 95), got {}", self.ie));
        }
        if !(self.bpl > 0.0) {
            return Err(format!("bpl must be positive, got {}", self.bpl));
        }
        if !(self.codec_delay_ms >= 0.0) {
            return Err(format!("codec_delay_ms must be non-negative, got {}", self.codec_delay_ms));
        }
        if !(self.is_impairment.is_finite() && self.advantage.is_finite()) {
            return Err("is_impairment and advantage must be finite".into());
        }
        Ok(())
    }
}

/// Effective equipment impairment under random loss of `ppl_percent` percent.
pub fn ie_eff(ppl_percent: f64, p: &EModelParams) -> f64 {
    let ppl = ppl_percent.clamp(0.0, 100.0);
    p.ie + (95.0 - p.ie) * ppl / (ppl + p.bpl)
}

/// Delay impairment Id for a one-way mouth-to-ear delay in milliseconds.
pub fn id_delay(one_way_delay_ms: f64) -> f64 {
    let d = one_way_delay_ms.max(0.0);
    let knee = if d > 177.3 { 0.11 * (d - 177.3) } else { 0.0 };
    0.024 * d + knee
}

/// Transmission rating, clamped to `[0, 100]`.
pub fn r_factor(ppl_percent: f64, one_way_delay_ms: f64, p: &EModelParams) -> f64 {
    let r = p.r0 - p.is_impairment - id_delay(one_way_delay_ms) - ie_eff(ppl_percent, p) + p.advantage;
    r.clamp(0.0, 100.0)
}

/// The cubic dips below 1 for R in (0, 6.515), so the result is floored at 1
/// to keep the mapping within `[1, 4.5]` and non-decreasing.
pub fn mos_from_r(r: f64) -> f64 {
    if r <= 0.0 {
        1.0
    } else if r >= 100.0 {
        4.5
    } else {
        (1.0 + 0.035 * r + 7e-6 * r * (r - 60.0) * (100.0 - r)).max(1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityBand {
    Best,
    High,
    Medium,
    Low,
    Poor,
}

impl QualityBand {
    pub const ALL: [QualityBand; 5] =
        [QualityBand::Best, QualityBand::High, QualityBand::Medium, QualityBand::Low, QualityBand::Poor];

    /// Lower edge (inclusive, except for `Poor`) and upper edge of the band.
    pub fn mos_range(self) -> (f64, f64) {
        match self {
            QualityBand::Best => (4.34, 4.5),
            QualityBand::High => (4.03, 4.34),
            QualityBand::Medium => (3.60, 4.03),
            QualityBand::Low => (3.10, 3.60),
            QualityBand::Poor => (1.0, 3.10),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            QualityBand::Best => "best",
            QualityBand::High => "high",
            QualityBand::Medium => "medium",
            QualityBand::Low => "low",
            QualityBand::Poor => "poor",
        }
    }
}

impl fmt::Display for QualityBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn quality_band(mos: f64) -> QualityBand {
    QualityBand::ALL
        .into_iter()
        .find(|b| mos >= b.mos_range().0 && *b != QualityBand::Poor)
        .unwrap_or(QualityBand::Poor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn d() -> EModelParams {
        EModelParams::default()
    }

    #[test]
    fn ie_eff_values() {
        assert_eq!(ie_eff(0.0, &d()), 11.0);
        assert_eq!(ie_eff(19.0, &d()), 53.0);
        let top = ie_eff(100.0, &d());
        assert!(top < 95.0);
        assert_abs_diff_eq!(top, 11.0 + 84.0 * 100.0 / 119.0, epsilon = 1e-12);
    }

    #[test]
    fn ie_eff_shape() {
        let mut prev = ie_eff(0.0, &d());
        for k in 1..=1000 {
            let v = ie_eff(k as f64 * 0.1, &d());
            assert!(v > prev && v < 95.0);
            prev = v;
        }
    }

    #[test]
    fn id_values() {
        assert_eq!(id_delay(0.0), 0.0);
        assert_abs_diff_eq!(id_delay(100.0), 2.4, epsilon = 1e-12);
        assert_abs_diff_eq!(id_delay(277.3), 17.6552, epsilon = 1e-9);
    }

    #[test]
    fn r_values() {
        assert_abs_diff_eq!(r_factor(0.0, 0.0, &d()), 82.2, epsilon = 1e-9);
        assert_abs_diff_eq!(r_factor(19.0, 0.0, &d()), 40.2, epsilon = 1e-9);
        assert_eq!(r_factor(100.0, 5_000.0, &d()), 0.0);
        let generous = EModelParams { advantage: 40.0, ..d() };
        assert_eq!(r_factor(0.0, 0.0, &generous), 100.0);
    }

    #[test]
    fn mos_values() {
        assert_eq!(mos_from_r(0.0), 1.0);
        assert_eq!(mos_from_r(-3.0), 1.0);
        assert_eq!(mos_from_r(100.0), 4.5);
        assert_abs_diff_eq!(mos_from_r(70.0), 3.60, epsilon = 0.005);
    }

    #[test]
    fn mos_is_monotone() {
        let mut prev = mos_from_r(0.0);
        for k in 1..=1000 {
            let r = k as f64 * 0.1;
            let m = mos_from_r(r);
            assert!(m >= prev, "decreasing at R={r}");
            if r > 6.6 {
                assert!(m > prev, "not strictly increasing at R={r}");
            }
            prev = m;
        }
        // The raw cubic goes below 1 here; the floor holds it.
        assert_eq!(mos_from_r(3.0), 1.0);
        assert!(mos_from_r(6.6) > 1.0);
    }

    #[test]
    fn mos_non_increasing_in_loss_and_delay() {
        let p = d();
        for li in 0..=40 {
            for di in 0..=40 {
                let (l, dl) = (li as f64 * 0.5, di as f64 * 10.0);
                let m = mos_from_r(r_factor(l, dl, &p));
                assert!(mos_from_r(r_factor(l + 0.5, dl, &p)) <= m);
                assert!(mos_from_r(r_factor(l, dl + 10.0, &p)) <= m);
            }
        }
    }

    #[test]
    fn band_edges_from_r() {
        for (r, edge) in [(90.0, 4.34), (80.0, 4.03), (70.0, 3.60), (60.0, 3.10)] {
            assert_abs_diff_eq!(mos_from_r(r), edge, epsilon = 0.01);
        }
    }

    #[test]
    fn bands() {
        assert_eq!(quality_band(3.80), QualityBand::Medium);
        assert_eq!(quality_band(4.40), QualityBand::Best);
        assert_eq!(quality_band(3.60), QualityBand::Medium);
        assert_eq!(quality_band(4.34), QualityBand::Best);
        assert_eq!(quality_band(4.03), QualityBand::High);
        assert_eq!(quality_band(3.10), QualityBand::Low);
        assert_eq!(quality_band(3.0999), QualityBand::Poor);
        assert_eq!(quality_band(1.0), QualityBand::Poor);
        assert_eq!(quality_band(mos_from_r(r_factor(100.0, 0.0, &d()))), QualityBand::Poor);
    }

    #[test]
    fn param_checks() {
        assert!(d().check().is_ok());
        assert!(EModelParams { ie: 95.0, ..d() }.check().is_err());
        assert!(EModelParams { r0: 0.0, ..d() }.check().is_err());
        assert!(EModelParams { bpl: 0.0, ..d() }.check().is_err());
    }
}
