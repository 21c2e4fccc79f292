//! Thermocouple data reduction and uncertainty propagation.
//!
//! Three in-block thermocouples (T₃ nearest the boiling surface) resolve
//! the temperature gradient with a second-order finite difference:
//! ΔT* = 3T₃ − 4T₂ + T₁, q″ = −k·ΔT*/(2Δx). The wall temperature is
//! back-calculated through the conduction length l, the HTC follows from
//! the wall superheat, and all uncertainties propagate by root sum of
//! squares. The φ metric complements Δh against its series maximum so
//! that low values mark rapid HTC change.
//!
//! Unit discipline: q″ is computed in W/m² internally and reported in
//! W/cm²; h is reported in W/(cm²·K).

use crate::{Error, Result};

pub const DEFAULT_K_CU: f64 = 390.0;
pub const DEFAULT_U_T: f64 = 0.5;
pub const DEFAULT_U_DX: f64 = 0.25e-3;

/// One steady-state reading plus the rig geometry.
///
/// Temperatures in °C, lengths in m, k in W/(m·K). T₃ is the thermocouple
/// nearest the surface; `l` is its distance to the boiling surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermoSample {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t_sat: f64,
    pub u_t: f64,
    pub dx: f64,
    pub u_dx: f64,
    pub l: f64,
    pub k_cu: f64,
}

impl ThermoSample {
    pub fn validate(&self) -> Result<()> {
        if self.dx <= 0.0 {
            return Err(Error::InvalidParams("dx must be > 0".into()));
        }
        if self.l < 0.0 {
            return Err(Error::InvalidParams("l must be >= 0".into()));
        }
        if self.k_cu <= 0.0 {
            return Err(Error::InvalidParams("k_cu must be > 0".into()));
        }
        if self.u_t < 0.0 || self.u_dx < 0.0 {
            return Err(Error::InvalidParams("uncertainties must be >= 0".into()));
        }
        Ok(())
    }
}

/// Reduced quantities at one heat-flux level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reduced {
    /// ΔT* = 3T₃ − 4T₂ + T₁, °C.
    pub dt_star: f64,
    /// Heat flux, W/m².
    pub q_si: f64,
    /// Heat flux, W/cm².
    pub q_wcm2: f64,
    /// Wall temperature, °C.
    pub t_w: f64,
    /// Wall superheat T_w − T_sat, °C.
    pub dt_wall: f64,
    /// HTC in W/(cm²·K); `None` when the superheat is zero.
    pub h_wcm2k: Option<f64>,
}

/// Fourier-law reduction: q″, T_w, ΔT_wall, h.
pub fn reduce(s: &ThermoSample) -> Result<Reduced> {
    s.validate()?;
    let dt_star = 3.0 * s.t3 - 4.0 * s.t2 + s.t1;
    let q_si = -s.k_cu * dt_star / (2.0 * s.dx);
    let q_wcm2 = q_si / 1e4;
    let t_w = s.t3 - q_si * s.l / s.k_cu;
    let dt_wall = t_w - s.t_sat;
    let h_wcm2k = if dt_wall == 0.0 {
        None
    } else {
        Some(q_wcm2 / dt_wall)
    };
    Ok(Reduced {
        dt_star,
        q_si,
        q_wcm2,
        t_w,
        dt_wall,
        h_wcm2k,
    })
}

/// RSS-propagated uncertainties for one reduced sample.
///
/// The relative form breaks down at ΔT* = 0; such records carry only the
/// absolute u_ΔT* and are flagged by `dt_star_zero`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagated {
    /// u_ΔT* = √((3u_T)² + (4u_T)² + u_T²) = √26·u_T, °C.
    pub u_dt_star: f64,
    /// Relative heat-flux uncertainty u_q/q.
    pub u_q_rel: Option<f64>,
    /// Absolute heat-flux uncertainty, W/cm².
    pub u_q_wcm2: Option<f64>,
    /// Wall-superheat uncertainty δT_s (T_sat held exact), °C.
    pub u_dt_wall: Option<f64>,
    /// HTC uncertainty δh, W/(cm²·K).
    pub u_h_wcm2k: Option<f64>,
    pub dt_star_zero: bool,
}

pub fn propagate_uncertainty(s: &ThermoSample, r: &Reduced) -> Propagated {
    let u_dt_star = ((3.0 * s.u_t).powi(2) + (4.0 * s.u_t).powi(2) + s.u_t.powi(2)).sqrt();
    if r.dt_star == 0.0 {
        return Propagated {
            u_dt_star,
            u_q_rel: None,
            u_q_wcm2: None,
            u_dt_wall: None,
            u_h_wcm2k: None,
            dt_star_zero: true,
        };
    }
    let u_q_rel = ((u_dt_star / r.dt_star).powi(2) + (s.u_dx / s.dx).powi(2)).sqrt();
    let u_q_wcm2 = r.q_wcm2.abs() * u_q_rel;
    // δT_s: T_w = T₃ − q″·l/k with T₃ and q″ as independent contributors,
    // T_sat exact, so u(ΔT_wall) = u(T_w).
    let u_q_si = r.q_si.abs() * u_q_rel;
    let u_dt_wall = (s.u_t.powi(2) + (u_q_si * s.l / s.k_cu).powi(2)).sqrt();
    let u_h = match r.h_wcm2k {
        Some(h) if r.dt_wall != 0.0 => {
            Some(h.abs() * (u_q_rel.powi(2) + (u_dt_wall / r.dt_wall).powi(2)).sqrt())
        }
        _ => None,
    };
    Propagated {
        u_dt_star,
        u_q_rel: Some(u_q_rel),
        u_q_wcm2: Some(u_q_wcm2),
        u_dt_wall: Some(u_dt_wall),
        u_h_wcm2k: u_h,
        dt_star_zero: false,
    }
}

/// Flag strings attached to thermal records.
pub mod flags {
    pub const ZERO_SUPERHEAT: &str = "zero_superheat";
    pub const DT_STAR_ZERO: &str = "dt_star_zero";
    pub const MISSING_H: &str = "missing_h";
}

/// One row of the reduced thermal table.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ThermalRecord {
    pub q: f64,
    pub u_q: Option<f64>,
    pub t_w: f64,
    pub dt_wall: f64,
    pub u_dt_wall: Option<f64>,
    pub h: Option<f64>,
    pub u_h: Option<f64>,
    pub dh: Option<f64>,
    pub u_dh: Option<f64>,
    pub phi: Option<f64>,
    pub u_phi: Option<f64>,
    pub flags: Vec<String>,
}

/// Reduces one sample into a record (φ columns filled later by
/// [`phi_series`]).
pub fn reduce_record(s: &ThermoSample) -> Result<ThermalRecord> {
    let r = reduce(s)?;
    let u = propagate_uncertainty(s, &r);
    let mut record_flags = Vec::new();
    if r.h_wcm2k.is_none() {
        record_flags.push(flags::ZERO_SUPERHEAT.to_string());
    }
    if u.dt_star_zero {
        record_flags.push(flags::DT_STAR_ZERO.to_string());
    }
    Ok(ThermalRecord {
        q: r.q_wcm2,
        u_q: u.u_q_wcm2,
        t_w: r.t_w,
        dt_wall: r.dt_wall,
        u_dt_wall: u.u_dt_wall,
        h: r.h_wcm2k,
        u_h: u.u_h_wcm2k,
        dh: None,
        u_dh: None,
        phi: None,
        u_phi: None,
        flags: record_flags,
    })
}

/// Fills Δh, φ, and their uncertainties across an ordered series.
///
/// Δh_i = h_i − h_{i−1} from i = 1; δ(Δh_i) = √(δh_i² + δh_{i−1}²)
/// (absolute RSS); φ_i = max_j(Δh_j) − Δh_i with the max index k
/// tie-broken to the lowest i; δφ_i = √(δ(Δh_k)² + δ(Δh_i)²).
pub fn phi_series(records: &mut [ThermalRecord]) -> Result<()> {
    if records.len() < 2 {
        return Err(Error::InvalidRun(
            "phi series needs at least 2 records".into(),
        ));
    }
    if !records.windows(2).all(|w| w[1].q > w[0].q) {
        return Err(Error::InvalidRun(
            "thermal records must be strictly increasing in q".into(),
        ));
    }
    for i in 1..records.len() {
        match (records[i].h, records[i - 1].h) {
            (Some(hi), Some(hp)) => {
                records[i].dh = Some(hi - hp);
                records[i].u_dh = match (records[i].u_h, records[i - 1].u_h) {
                    (Some(ui), Some(up)) => Some((ui * ui + up * up).sqrt()),
                    _ => None,
                };
            }
            _ => {
                records[i].flags.push(flags::MISSING_H.to_string());
            }
        }
    }
    // Series maximum of Δh, lowest index on ties.
    let mut max: Option<(usize, f64)> = None;
    for (i, rec) in records.iter().enumerate() {
        if let Some(dh) = rec.dh {
            if max.is_none_or(|(_, best)| dh > best) {
                max = Some((i, dh));
            }
        }
    }
    let Some((k, dh_max)) = max else {
        return Ok(());
    };
    let u_dh_max = records[k].u_dh;
    for rec in records.iter_mut().skip(1) {
        if let Some(dh) = rec.dh {
            rec.phi = Some(dh_max - dh);
            rec.u_phi = match (u_dh_max, rec.u_dh) {
                (Some(uk), Some(ui)) => Some((uk * uk + ui * ui).sqrt()),
                _ => None,
            };
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(t1: f64, t2: f64, t3: f64) -> ThermoSample {
        ThermoSample {
            t1,
            t2,
            t3,
            t_sat: 100.0,
            u_t: DEFAULT_U_T,
            dx: 0.005,
            u_dx: DEFAULT_U_DX,
            l: 0.002,
            k_cu: DEFAULT_K_CU,
        }
    }

    fn record_with_h(i: usize, h: f64, u_h: f64) -> ThermalRecord {
        ThermalRecord {
            q: 10.0 * (i as f64 + 1.0),
            u_q: None,
            t_w: 0.0,
            dt_wall: 1.0,
            u_dt_wall: None,
            h: Some(h),
            u_h: Some(u_h),
            dh: None,
            u_dh: None,
            phi: None,
            u_phi: None,
            flags: Vec::new(),
        }
    }

    #[test]
    fn isothermal_block_has_zero_flux() {
        let r = reduce(&sample(110.0, 110.0, 110.0)).unwrap();
        assert_eq!(r.dt_star, 0.0);
        assert_eq!(r.q_wcm2, 0.0);
        assert_eq!(r.t_w, 110.0);
        let u = propagate_uncertainty(&sample(110.0, 110.0, 110.0), &r);
        assert!(u.dt_star_zero);
        assert!(u.u_q_rel.is_none());
        assert!((u.u_dt_star - 26f64.sqrt() * 0.5).abs() < 1e-12);
    }

    #[test]
    fn hand_evaluated_reduction_fixture() {
        let s = sample(114.0, 112.0, 110.0);
        let r = reduce(&s).unwrap();
        assert!((r.dt_star - -4.0).abs() < 1e-12);
        assert!((r.q_si - 156_000.0).abs() < 1e-9);
        assert!((r.q_wcm2 - 15.6).abs() < 1e-12);
        assert!((r.t_w - 109.2).abs() < 1e-12);
        assert!((r.dt_wall - 9.2).abs() < 1e-12);
        let h = r.h_wcm2k.unwrap();
        assert!((h - 15.6 / 9.2).abs() < 1e-12);

        let u = propagate_uncertainty(&s, &r);
        let u_q_rel = u.u_q_rel.unwrap();
        let expect = (0.40625f64 + 0.0025).sqrt();
        assert!((u_q_rel - expect).abs() < 1e-9);
        let u_q = u.u_q_wcm2.unwrap();
        assert!((u_q - 15.6 * expect).abs() < 1e-6);
        assert!(u_q > 9.9 && u_q < 10.0);
    }

    #[test]
    fn single_term_rss_collapses() {
        // u_dx = 0 and u_ΔT*/|ΔT*| = 0.1 → u_q/q = 0.1 exactly.
        let mut s = sample(114.0, 112.0, 110.0);
        s.u_dx = 0.0;
        s.u_t = 0.4 / 26f64.sqrt(); // u_ΔT* = 0.4, ΔT* = -4
        let r = reduce(&s).unwrap();
        let u = propagate_uncertainty(&s, &r);
        assert!((u.u_q_rel.unwrap().abs() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn phi_arithmetic_on_spec_series() {
        let mut recs: Vec<ThermalRecord> = [1.0, 2.0, 4.0, 5.0]
            .iter()
            .enumerate()
            .map(|(i, &h)| record_with_h(i, h, 0.0))
            .collect();
        phi_series(&mut recs).unwrap();
        let dh: Vec<f64> = recs[1..].iter().map(|r| r.dh.unwrap()).collect();
        assert_eq!(dh, vec![1.0, 2.0, 1.0]);
        let phi: Vec<f64> = recs[1..].iter().map(|r| r.phi.unwrap()).collect();
        assert_eq!(phi, vec![1.0, 0.0, 1.0]);
        assert!(recs[0].phi.is_none());
    }

    #[test]
    fn constant_h_gives_zero_phi() {
        let mut recs: Vec<ThermalRecord> = (0..5).map(|i| record_with_h(i, 2.5, 0.1)).collect();
        phi_series(&mut recs).unwrap();
        for r in &recs[1..] {
            assert_eq!(r.dh.unwrap(), 0.0);
            assert_eq!(r.phi.unwrap(), 0.0);
        }
    }

    #[test]
    fn dh_uncertainty_is_absolute_rss() {
        let mut recs = vec![record_with_h(0, 1.0, 0.3), record_with_h(1, 2.0, 0.4)];
        phi_series(&mut recs).unwrap();
        assert!((recs[1].u_dh.unwrap() - 0.5).abs() < 1e-12);
        // i == k: δφ = √2 · δ(Δh_k).
        assert!((recs[1].u_phi.unwrap() - 0.5 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn heating_from_below_gives_positive_flux() {
        // T₁ deepest and hottest: ΔT* < 0 and q″ > 0.
        let r = reduce(&sample(120.0, 115.0, 111.0)).unwrap();
        assert!(r.dt_star < 0.0);
        assert!(r.q_wcm2 > 0.0);
    }

    proptest! {
        #[test]
        fn reduce_agrees_with_inline_evaluation(
            t3 in 100.0f64..160.0,
            g1 in 0.1f64..10.0,
            g2 in 0.1f64..10.0,
            dx in 0.001f64..0.02,
            l in 0.0f64..0.01,
            k in 100.0f64..500.0,
        ) {
            let t2 = t3 + g1;
            let t1 = t2 + g2;
            let s = ThermoSample {
                t1, t2, t3,
                t_sat: 100.0,
                u_t: 0.5,
                dx,
                u_dx: 0.25e-3,
                l,
                k_cu: k,
            };
            let r = reduce(&s).unwrap();
            let dt = 3.0 * t3 - 4.0 * t2 + t1;
            let q = -k * dt / (2.0 * dx);
            prop_assert!((r.q_si - q).abs() <= 1e-12 * q.abs().max(1.0));
            let tw = t3 - q * l / k;
            prop_assert!((r.t_w - tw).abs() <= 1e-12 * tw.abs().max(1.0));
            if (tw - 100.0) != 0.0 {
                let h = (q / 1e4) / (tw - 100.0);
                prop_assert!((r.h_wcm2k.unwrap() - h).abs() <= 1e-12 * h.abs().max(1.0));
            }
        }

        #[test]
        fn argmin_phi_is_argmax_dh(h_vals in proptest::collection::vec(0.1f64..50.0, 3..12)) {
            let mut recs: Vec<ThermalRecord> = h_vals
                .iter()
                .enumerate()
                .map(|(i, &h)| record_with_h(i, h, 0.05))
                .collect();
            phi_series(&mut recs).unwrap();
            let dh: Vec<f64> = recs[1..].iter().map(|r| r.dh.unwrap()).collect();
            let phi: Vec<f64> = recs[1..].iter().map(|r| r.phi.unwrap()).collect();
            let argmax_dh = dh
                .iter()
                .enumerate()
                .fold((0usize, f64::NEG_INFINITY), |acc, (i, &v)| {
                    if v > acc.1 { (i, v) } else { acc }
                })
                .0;
            let argmin_phi = phi
                .iter()
                .enumerate()
                .fold((0usize, f64::INFINITY), |acc, (i, &v)| {
                    if v < acc.1 { (i, v) } else { acc }
                })
                .0;
            prop_assert_eq!(argmax_dh, argmin_phi);
            prop_assert_eq!(phi[argmin_phi], 0.0);
            prop_assert!(phi.iter().all(|&p| p >= 0.0));
        }

        #[test]
        fn translation_invariance_of_dh_and_phi(
            h_vals in proptest::collection::vec(0.1f64..50.0, 3..10),
            shift in 0.0f64..100.0,
        ) {
            let build = |offset: f64| {
                let mut recs: Vec<ThermalRecord> = h_vals
                    .iter()
                    .enumerate()
                    .map(|(i, &h)| record_with_h(i, h + offset, 0.0))
                    .collect();
                phi_series(&mut recs).unwrap();
                recs[1..]
                    .iter()
                    .map(|r| (r.dh.unwrap(), r.phi.unwrap()))
                    .collect::<Vec<_>>()
            };
            let base = build(0.0);
            let shifted = build(shift);
            for ((d0, p0), (d1, p1)) in base.iter().zip(&shifted) {
                prop_assert!((d0 - d1).abs() < 1e-9);
                prop_assert!((p0 - p1).abs() < 1e-9);
            }
        }

        #[test]
        fn uncertainties_monotone_in_u_t(u_a in 0.0f64..1.0, u_b in 0.0f64..1.0) {
            let (lo, hi) = if u_a <= u_b { (u_a, u_b) } else { (u_b, u_a) };
            let mut s = sample(114.0, 112.0, 110.0);
            s.u_t = lo;
            let r = reduce(&s).unwrap();
            let p_lo = propagate_uncertainty(&s, &r);
            s.u_t = hi;
            let p_hi = propagate_uncertainty(&s, &r);
            prop_assert!(p_hi.u_dt_star >= p_lo.u_dt_star);
            prop_assert!(p_hi.u_q_rel.unwrap() >= p_lo.u_q_rel.unwrap());
            prop_assert!(p_hi.u_dt_wall.unwrap() >= p_lo.u_dt_wall.unwrap());
            prop_assert!(p_hi.u_h_wcm2k.unwrap() >= p_lo.u_h_wcm2k.unwrap());
            prop_assert!(p_lo.u_dt_star >= 0.0 && p_lo.u_q_rel.unwrap() >= 0.0);
        }
    }
}
