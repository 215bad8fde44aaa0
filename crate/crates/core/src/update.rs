//! Local update kernels for the first-order upwind discretization.
//!
//! Both kernels reduce the two-axis upwind equation to
//! `(s - a1)^2 + (s - a2)^2 = (h / F)^2` and take its larger root when it is upwind,
//! falling back to a one-sided update otherwise.

use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// Which formula produced an update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    TwoSidedQuadratic,
    OneSided,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateResult {
    /// The new value of `u`.
    pub value: f64,
    /// The factored unknown `tau = u - T` (equal to `value` for unfactored updates).
    pub tau: f64,
    pub branch: Branch,
}

/// An Accepted neighbor: its value `u` and the factor `T` evaluated there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisNeighbor {
    pub u: f64,
    pub t: f64,
}

impl AxisNeighbor {
    pub fn new(u: f64, t: f64) -> Self {
        Self { u, t }
    }

    #[inline]
    pub fn tau(&self) -> f64 {
        self.u - self.t
    }
}

/// Upwind neighbor picked on one axis; `k = +1` is the lower-index neighbor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selected {
    pub neighbor: AxisNeighbor,
    pub k: f64,
}

/// The four axis neighbors of a node; `None` marks a missing (non-Accepted,
/// out-of-domain or blocked) neighbor.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeighborData {
    pub left: Option<AxisNeighbor>,
    pub right: Option<AxisNeighbor>,
    pub down: Option<AxisNeighbor>,
    pub up: Option<AxisNeighbor>,
}

#[inline]
fn select(lower: Option<AxisNeighbor>, upper: Option<AxisNeighbor>) -> Option<Selected> {
    match (lower, upper) {
        (Some(l), Some(r)) => Some(if r.u < l.u {
            Selected {
                neighbor: r,
                k: -1.0,
            }
        } else {
            Selected {
                neighbor: l,
                k: 1.0,
            }
        }),
        (Some(l), None) => Some(Selected {
            neighbor: l,
            k: 1.0,
        }),
        (None, Some(r)) => Some(Selected {
            neighbor: r,
            k: -1.0,
        }),
        (None, None) => None,
    }
}

impl NeighborData {
    /// Smaller-`u` horizontal neighbor (ties go to the left one).
    #[inline]
    pub fn horizontal(&self) -> Option<Selected> {
        select(self.left, self.right)
    }

    /// Smaller-`u` vertical neighbor (ties go to the lower one).
    #[inline]
    pub fn vertical(&self) -> Option<Selected> {
        select(self.down, self.up)
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_none() && self.right.is_none() && self.down.is_none() && self.up.is_none()
    }
}

/// Unfactored update from the selected horizontal and vertical neighbor values.
/// Infinite or NaN inputs count as missing.
pub fn unfactored_update(
    u_h: Option<f64>,
    u_v: Option<f64>,
    h: f64,
    f: f64,
) -> Result<UpdateResult> {
    let u_h = u_h.filter(|v| v.is_finite());
    let u_v = u_v.filter(|v| v.is_finite());
    let hf = h / f;
    let value = match (u_h, u_v) {
        (None, None) => return Err(Error::NoNeighbor),
        (Some(a), None) | (None, Some(a)) => {
            return Ok(UpdateResult {
                value: a + hf,
                tau: a + hf,
                branch: Branch::OneSided,
            })
        }
        (Some(a), Some(b)) => {
            let diff = a - b;
            let disc = 2.0 * hf * hf - diff * diff;
            let mut found = None;
            if disc >= 0.0 {
                let mid = 0.5 * (a + b);
                let half = 0.5 * disc.sqrt();
                let top = a.max(b);
                for root in [mid - half, mid + half] {
                    if root >= top {
                        found = Some(root);
                        break;
                    }
                }
            }
            match found {
                Some(root) => {
                    return Ok(UpdateResult {
                        value: root,
                        tau: root,
                        branch: Branch::TwoSidedQuadratic,
                    })
                }
                None => a.min(b) + hf,
            }
        }
    };
    Ok(UpdateResult {
        value,
        tau: value,
        branch: Branch::OneSided,
    })
}

/// Factored update for `u = T + tau` at a node with factor value `t_node` and gradient
/// `grad_t`; neighbors carry their own `u` and `T`.
pub fn factored_update(
    nb: &NeighborData,
    grad_t: Vec2,
    t_node: f64,
    h: f64,
    f: f64,
) -> Result<UpdateResult> {
    let hor = nb.horizontal().filter(|s| s.neighbor.u.is_finite());
    let ver = nb.vertical().filter(|s| s.neighbor.u.is_finite());
    let hf = h / f;
    // shifted neighbor values: tau_N - h k dT
    let a1 = hor.map(|s| s.neighbor.tau() - h * s.k * grad_t.x);
    let a2 = ver.map(|s| s.neighbor.tau() - h * s.k * grad_t.y);
    let tau = match (a1, a2) {
        (None, None) => return Err(Error::NoNeighbor),
        (Some(a), None) | (None, Some(a)) => {
            let tau = a + hf;
            return Ok(UpdateResult {
                value: t_node + tau,
                tau,
                branch: Branch::OneSided,
            });
        }
        (Some(a), Some(b)) => {
            let top = hor.unwrap().neighbor.u.max(ver.unwrap().neighbor.u);
            let diff = a - b;
            let disc = 2.0 * hf * hf - diff * diff;
            if disc >= 0.0 {
                let mid = 0.5 * (a + b);
                let half = 0.5 * disc.sqrt();
                for root in [mid - half, mid + half] {
                    if t_node + root >= top {
                        return Ok(UpdateResult {
                            value: t_node + root,
                            tau: root,
                            branch: Branch::TwoSidedQuadratic,
                        });
                    }
                }
            }
            // ties go to the horizontal axis
            if b < a {
                b + hf
            } else {
                a + hf
            }
        }
    };
    Ok(UpdateResult {
        value: t_node + tau,
        tau,
        branch: Branch::OneSided,
    })
}
