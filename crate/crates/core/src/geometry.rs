//! Master/slave role assignment from the space-time layout of the setup.
//!
//! Units have `c = 1`. A detection at event `E` collapses the field on and
//! above its past light cone, i.e. everywhere outside its absolute past. A
//! photon worldline enters that region at the first time `t` with
//! `t >= t_E - |x(t) - x_E|`.

use thiserror::Error;

use crate::engine::Station;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("stations A and B are at the same position {0}")]
    CoincidentStations(f64),
    #[error("signal speed must be in (0, 1] (units of c), got {0}")]
    BadSpeed(f64),
    #[error("geometry contains a non-finite value")]
    NotFinite,
}

/// Positions of source and stations on a line, fibre signal speed and
/// emission time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationGeometry {
    pub source: f64,
    pub station_a: f64,
    pub station_b: f64,
    /// Propagation speed of the photons as a fraction of `c`.
    pub speed: f64,
    pub emission_time: f64,
}

impl StationGeometry {
    pub fn vacuum(source: f64, station_a: f64, station_b: f64) -> Self {
        Self {
            source,
            station_a,
            station_b,
            speed: 1.0,
            emission_time: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let all = [
            self.source,
            self.station_a,
            self.station_b,
            self.speed,
            self.emission_time,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NotFinite);
        }
        if !(self.speed > 0.0 && self.speed <= 1.0) {
            return Err(GeometryError::BadSpeed(self.speed));
        }
        if self.station_a == self.station_b {
            return Err(GeometryError::CoincidentStations(self.station_a));
        }
        Ok(())
    }

    fn detection_time(&self, station: f64) -> f64 {
        self.emission_time + (station - self.source).abs() / self.speed
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoleAssignment {
    pub master: Station,
    pub detection_a: f64,
    pub detection_b: f64,
    /// When the photon travelling to A enters the collapsed region of B's
    /// detection. `None` if it is detected first.
    pub entry_a: Option<f64>,
    /// When the photon travelling to B enters the collapsed region of A's
    /// detection.
    pub entry_b: Option<f64>,
}

/// Computes `T_a`, `T_b` and picks as master the station whose result reaches
/// the other photon first. Ties go to A.
pub fn assign_roles(geom: &StationGeometry) -> Result<RoleAssignment, GeometryError> {
    geom.validate()?;
    let detection_a = geom.detection_time(geom.station_a);
    let detection_b = geom.detection_time(geom.station_b);
    let entry_b = entry_time(geom, geom.station_b, geom.station_a, detection_a);
    let entry_a = entry_time(geom, geom.station_a, geom.station_b, detection_b);

    let master = match (entry_a, entry_b) {
        (_, None) if entry_a.is_some() => Station::B,
        (Some(ta), Some(tb)) if ta < tb => Station::B,
        _ => Station::A,
    };
    Ok(RoleAssignment {
        master,
        detection_a,
        detection_b,
        entry_a,
        entry_b,
    })
}

/// Entry time of the photon heading to `target` into the collapsed region of
/// the detection event `(other, other_time)`.
fn entry_time(geom: &StationGeometry, target: f64, other: f64, other_time: f64) -> Option<f64> {
    let t0 = geom.emission_time;
    let t_end = geom.detection_time(target);
    let dir = (target - geom.source).signum();
    let pos = |t: f64| geom.source + dir * geom.speed * (t - t0);
    // Non-decreasing in t because speed <= 1.
    let gap = |t: f64| t - other_time + (pos(t) - other).abs();

    let mut knots = vec![t0];
    if dir != 0.0 {
        let t_kink = t0 + (other - geom.source) / (dir * geom.speed);
        if t_kink > t0 && t_kink < t_end {
            knots.push(t_kink);
        }
    }
    knots.push(t_end);

    for w in knots.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (g_lo, g_hi) = (gap(lo), gap(hi));
        if g_lo >= 0.0 {
            return Some(lo);
        }
        if g_hi >= 0.0 {
            // gap is linear on [lo, hi]
            return Some(lo + (-g_lo) * (hi - lo) / (g_hi - g_lo));
        }
    }
    if gap(t_end) >= 0.0 {
        Some(t_end)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_geometry_ties_to_a() {
        let r = assign_roles(&StationGeometry::vacuum(0.0, -3.0, 3.0)).unwrap();
        assert_eq!(r.entry_a, r.entry_b);
        assert_eq!(r.master, Station::A);

        let fibre = StationGeometry {
            speed: 0.5,
            ..StationGeometry::vacuum(1.0, -2.0, 4.0)
        };
        let r = assign_roles(&fibre).unwrap();
        assert_eq!(r.entry_a, r.entry_b);
        assert_eq!(r.master, Station::A);
    }

    #[test]
    fn vacuum_cones_meet_at_the_source() {
        // A detects at t=1, B at t=2; both past cones pass through (x_S, T_0).
        let r = assign_roles(&StationGeometry::vacuum(0.0, -1.0, 2.0)).unwrap();
        assert_eq!(r.detection_a, 1.0);
        assert_eq!(r.detection_b, 2.0);
        assert_eq!(r.entry_a, Some(0.0));
        assert_eq!(r.entry_b, Some(0.0));
        assert_eq!(r.master, Station::A);
    }

    #[test]
    fn slow_fibre_asymmetric_layout() {
        // speed 2/3: t_A = 1.5, t_B = 3.
        // B photon x = 2t/3 meets t = 1.5 - (x + 1) at t = 0.3.
        // A photon x = -2t/3 meets t = 3 - (2 - x) at t = 0.6.
        let geom = StationGeometry {
            speed: 2.0 / 3.0,
            ..StationGeometry::vacuum(0.0, -1.0, 2.0)
        };
        let r = assign_roles(&geom).unwrap();
        assert!((r.detection_a - 1.5).abs() < 1e-12);
        assert!((r.detection_b - 3.0).abs() < 1e-12);
        assert!((r.entry_b.unwrap() - 0.3).abs() < 1e-12);
        assert!((r.entry_a.unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(r.master, Station::A);

        let mirrored = StationGeometry {
            station_a: 2.0,
            station_b: -1.0,
            ..geom
        };
        assert_eq!(assign_roles(&mirrored).unwrap().master, Station::B);
    }

    #[test]
    fn detection_inside_other_past_cone() {
        // B sits next to the source; A is far down a slow fibre, so B's
        // detection lies in A's absolute past and B must be master.
        let geom = StationGeometry {
            speed: 0.1,
            ..StationGeometry::vacuum(0.0, 10.0, -0.1)
        };
        let r = assign_roles(&geom).unwrap();
        assert_eq!(r.entry_b, None);
        assert!(r.entry_a.is_some());
        assert_eq!(r.master, Station::B);
    }

    #[test]
    fn entries_never_precede_emission() {
        for &(s, a, b, v, t0) in &[
            (0.0, -1.0, 2.0, 1.0, 5.0),
            (0.3, -4.0, 1.0, 0.7, -2.0),
            (-1.0, 3.0, 8.0, 0.2, 0.0),
            (2.0, 2.0, 5.0, 0.9, 1.0),
        ] {
            let geom = StationGeometry {
                source: s,
                station_a: a,
                station_b: b,
                speed: v,
                emission_time: t0,
            };
            let r = assign_roles(&geom).unwrap();
            for t in [r.entry_a, r.entry_b].into_iter().flatten() {
                assert!(t >= t0);
            }
        }
    }

    #[test]
    fn degenerate_geometries_rejected() {
        assert_eq!(
            assign_roles(&StationGeometry::vacuum(0.0, 1.0, 1.0)),
            Err(GeometryError::CoincidentStations(1.0))
        );
        let fast = StationGeometry {
            speed: 1.5,
            ..StationGeometry::vacuum(0.0, -1.0, 1.0)
        };
        assert_eq!(assign_roles(&fast), Err(GeometryError::BadSpeed(1.5)));
        assert_eq!(
            assign_roles(&StationGeometry::vacuum(f64::NAN, -1.0, 1.0)),
            Err(GeometryError::NotFinite)
        );
    }
}
