//! Lower convex envelope of achievable `(M, R)` pairs.
//!
//! Memory-sharing between two placements achieves every point on the segment
//! joining them, and a larger cache can always be left partly unused. The
//! achievable region is therefore the convex hull extended to the right, and
//! its lower boundary is non-increasing: the lower hull up to the leftmost
//! point of minimum rate, then flat.

use num_traits::{FromPrimitive, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{exact_to_f64, frac_to_exact, Exact};
use crate::rates::RatePoint;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    /// A corner of the envelope.
    Vertex,
    /// On the envelope but not a corner (collinear, duplicate, or on the flat
    /// tail).
    OnEdge,
    /// Strictly above the envelope.
    Dominated,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassifiedPoint {
    pub point: RatePoint,
    pub status: PointStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Envelope {
    /// Input points in input order.
    pub points: Vec<ClassifiedPoint>,
    /// Indices into `points` of the corners, by increasing memory.
    pub vertices: Vec<usize>,
    #[serde(skip)]
    coords: Vec<(Exact, Exact)>,
}

fn coords(p: &RatePoint) -> Result<(Exact, Exact)> {
    let r = match &p.exact {
        Some(r) => r.clone(),
        None => Exact::from_f64(p.rate)
            .ok_or_else(|| Error::validation(format!("non-finite rate in {}", p.label)))?,
    };
    Ok((frac_to_exact(p.memory), r))
}

/// Twice the signed area of `o, a, b`; positive for a left turn.
fn cross(o: &(Exact, Exact), a: &(Exact, Exact), b: &(Exact, Exact)) -> Exact {
    (&a.0 - &o.0) * (&b.1 - &o.1) - (&a.1 - &o.1) * (&b.0 - &o.0)
}

/// Computes the envelope of `points` and classifies each of them.
///
/// Exact rates are used when present, so ties at rational popularities are
/// resolved exactly.
pub fn lower_envelope(points: &[RatePoint]) -> Result<Envelope> {
    if points.is_empty() {
        return Err(Error::validation("at least one point is required"));
    }
    let xy: Vec<(Exact, Exact)> = points.iter().map(coords).collect::<Result<_>>()?;
    if let Some(p) = xy
        .iter()
        .position(|(m, r)| m.is_negative() || r.is_negative())
    {
        return Err(Error::validation(format!(
            "point {} has a negative coordinate",
            points[p].label
        )));
    }

    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| xy[a].cmp(&xy[b]).then(a.cmp(&b)));
    // Lowest rate per memory value.
    order.dedup_by(|b, a| xy[*a].0 == xy[*b].0);

    let mut hull: Vec<usize> = Vec::new();
    for &i in &order {
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            if cross(&xy[o], &xy[a], &xy[i]) <= Exact::zero() {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let lowest = hull
        .iter()
        .enumerate()
        .min_by(|(_, &a), (_, &b)| xy[a].1.cmp(&xy[b].1))
        .map(|(pos, _)| pos)
        .expect("non-empty hull");
    hull.truncate(lowest + 1);

    let mut env = Envelope {
        points: Vec::with_capacity(points.len()),
        vertices: hull,
        coords: Vec::new(),
    };
    env.coords = env.vertices.iter().map(|&i| xy[i].clone()).collect();
    for (i, p) in points.iter().enumerate() {
        let status = if env.vertices.contains(&i) {
            PointStatus::Vertex
        } else if xy[i].1 > env.value(&xy[i].0).expect("inside the range") {
            PointStatus::Dominated
        } else {
            PointStatus::OnEdge
        };
        env.points.push(ClassifiedPoint {
            point: p.clone(),
            status,
        });
    }
    Ok(env)
}

impl Envelope {
    /// Envelope value at memory `m`; `None` left of the smallest memory.
    pub fn value(&self, m: &Exact) -> Option<Exact> {
        let first = self.coords.first()?;
        if m < &first.0 {
            return None;
        }
        for w in self.coords.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if m <= &b.0 {
                let t = (m - &a.0) / (&b.0 - &a.0);
                return Some(&a.1 + t * (&b.1 - &a.1));
            }
        }
        Some(self.coords.last().expect("non-empty").1.clone())
    }

    pub fn value_f64(&self, m: &Exact) -> Option<f64> {
        self.value(m).map(|v| exact_to_f64(&v))
    }

    pub fn vertex_points(&self) -> impl Iterator<Item = &RatePoint> {
        self.vertices.iter().map(|&i| &self.points[i].point)
    }

    pub fn status_of(&self, label: &str) -> Option<PointStatus> {
        self.points
            .iter()
            .find(|p| p.point.label == label)
            .map(|p| p.status)
    }
}
