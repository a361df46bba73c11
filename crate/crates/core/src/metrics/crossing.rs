use serde::{Deserialize, Serialize};

use crate::linkage::Vec2;
use crate::trajectory::WtLayout;

/// Which legs must clear the obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gait {
    /// Brick-shaped obstacle in one track: legs A and B.
    Biped,
    /// Step-shaped obstacle spanning the body width: every leg.
    Quad,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingProbability {
    /// Probability in percent.
    pub psi: f64,
    /// Some leg never rises above the obstacle height.
    pub insufficient_clearance: bool,
}

/// Probability (in %) that an `a × b` obstacle placed uniformly at random along
/// one stride is stepped over without contact.
///
/// Each participating leg blocks the stretches of ground where its swing
/// arch is at or below height `b` (the arch's intersections with `y = b`) and
/// its footholds. A placement succeeds when the whole obstacle lies inside
/// one unblocked stretch, so ψ = Σ max(0, gap − a) / l with `l` the stride.
pub fn crossing_probability(layout: &WtLayout, a: f64, b: f64, gait: Gait) -> CrossingProbability {
    let l = layout.stride;
    let legs: Vec<_> = match gait {
        Gait::Biped => layout
            .legs
            .iter()
            .filter(|w| w.id == "A" || w.id == "B")
            .collect(),
        Gait::Quad => layout.legs.iter().collect(),
    };
    let legs = if legs.is_empty() {
        layout.legs.iter().collect()
    } else {
        legs
    };
    if !(l > 0.0) || legs.is_empty() {
        return CrossingProbability {
            psi: 0.0,
            insufficient_clearance: true,
        };
    }
    let mut blocked: Vec<(f64, f64)> = Vec::new();
    let mut insufficient = false;
    for leg in &legs {
        let pts = &leg.points;
        if pts.iter().all(|p| p.y <= b) {
            insufficient = true;
        }
        for p in [pts[0], pts[pts.len() - 1]] {
            push_mod(&mut blocked, p.x, p.x, l);
        }
        for w in pts.windows(2) {
            if let Some((x0, x1)) = low_part(w[0], w[1], b) {
                push_mod(&mut blocked, x0.min(x1), x0.max(x1), l);
            }
        }
    }
    if insufficient {
        return CrossingProbability {
            psi: 0.0,
            insufficient_clearance: true,
        };
    }
    blocked.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (s, e) in blocked {
        match merged.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => merged.push((s, e)),
        }
    }
    let mut free = 0.0;
    for (i, cur) in merged.iter().enumerate() {
        let next_start = if i + 1 < merged.len() {
            merged[i + 1].0
        } else {
            merged[0].0 + l
        };
        let gap = next_start - cur.1;
        free += (gap - a).max(0.0);
    }
    CrossingProbability {
        psi: (100.0 * free / l).clamp(0.0, 100.0),
        insufficient_clearance: false,
    }
}

/// x-extent of the part of segment `p → q` lying at or below height `b`.
fn low_part(p: Vec2, q: Vec2, b: f64) -> Option<(f64, f64)> {
    match (p.y <= b, q.y <= b) {
        (true, true) => Some((p.x, q.x)),
        (false, false) => None,
        _ => {
            let s = (b - p.y) / (q.y - p.y);
            let xc = p.x + s * (q.x - p.x);
            if p.y <= b {
                Some((p.x, xc))
            } else {
                Some((xc, q.x))
            }
        }
    }
}

/// Adds `[s, e]` to `out` folded onto the circle `[0, l)`.
fn push_mod(out: &mut Vec<(f64, f64)>, s: f64, e: f64, l: f64) {
    if e - s >= l {
        out.push((0.0, l));
        return;
    }
    let s0 = s.rem_euclid(l);
    let e0 = s0 + (e - s);
    if e0 <= l {
        out.push((s0, e0));
    } else {
        out.push((s0, l));
        out.push((0.0, e0 - l));
    }
}
