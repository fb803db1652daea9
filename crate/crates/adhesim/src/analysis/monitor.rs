//! Time series of the conserved/bounded quantities tracked along a run.

use crate::analysis::{field, lyapunov_value};
use crate::dynamics::{ModelParams, State};
use crate::geometry::GridGeometry;
use crate::nonlocal::sup_vec_norm;

/// One sample of the monitored quantities.
#[derive(Debug, Clone)]
pub struct MonitorRecord {
    pub t: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    pub sup_u: f64,
    pub sup_v: f64,
    pub sup_k: f64,
    pub sup_s: f64,
    pub min_u: f64,
    pub min_v: f64,
    /// Undefined when `v <= 0` somewhere or a growth rate vanishes.
    pub lyapunov: Option<f64>,
    /// Cumulative clipped-cell count up to this sample.
    pub clip_count: u64,
}

impl MonitorRecord {
    pub fn measure(
        state: &State,
        k_vel: &[[f64; 2]],
        s_vel: &[[f64; 2]],
        geom: &GridGeometry,
        p: &ModelParams,
        clip_count: u64,
    ) -> Self {
        Self {
            t: state.t,
            mass_u: field::mass(&state.u, geom),
            mass_v: field::mass(&state.v, geom),
            sup_u: field::sup_abs(&state.u, geom),
            sup_v: field::sup_abs(&state.v, geom),
            sup_k: sup_vec_norm(k_vel, geom),
            sup_s: sup_vec_norm(s_vel, geom),
            min_u: field::min_value(&state.u, geom),
            min_v: field::min_value(&state.v, geom),
            lyapunov: lyapunov_value(state, p, geom).ok(),
            clip_count,
        }
    }
}

/// Strictly time-ordered monitor samples.
#[derive(Debug, Clone, Default)]
pub struct MonitorSeries {
    records: Vec<MonitorRecord>,
}

impl MonitorSeries {
    pub fn push(&mut self, rec: MonitorRecord) {
        if let Some(last) = self.records.last() {
            debug_assert!(rec.t > last.t, "monitor times must increase");
        }
        self.records.push(rec);
    }

    pub fn records(&self) -> &[MonitorRecord] {
        &self.records
    }

    /// Fixed CSV schema; floats carry 17 significant digits so identical
    /// runs serialise byte-identically.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "t,mass_u,mass_v,sup_u,sup_v,sup_K,sup_S,min_u,min_v,lyapunov,clip_count\n",
        );
        for r in &self.records {
            let lyap = match r.lyapunov {
                Some(x) => format!("{x:.16e}"),
                None => "nan".to_string(),
            };
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{}\n",
                r.t,
                r.mass_u,
                r.mass_v,
                r.sup_u,
                r.sup_v,
                r.sup_k,
                r.sup_s,
                r.min_u,
                r.min_v,
                lyap,
                r.clip_count
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_matches_interface() {
        let s = MonitorSeries::default();
        assert!(s
            .to_csv()
            .starts_with("t,mass_u,mass_v,sup_u,sup_v,sup_K,sup_S,min_u,min_v,lyapunov,clip_count"));
    }

    #[test]
    fn csv_prints_17_significant_digits() {
        let mut s = MonitorSeries::default();
        s.push(MonitorRecord {
            t: 1.0 / 3.0,
            mass_u: 0.1,
            mass_v: 0.2,
            sup_u: 0.3,
            sup_v: 0.4,
            sup_k: 0.0,
            sup_s: 0.0,
            min_u: 0.0,
            min_v: 0.0,
            lyapunov: None,
            clip_count: 0,
        });
        let line = s.to_csv().lines().nth(1).unwrap().to_string();
        assert!(line.starts_with("3.3333333333333331e-1,"));
        assert!(line.ends_with(",nan,0"));
    }
}
