//! Two nodal level sets on the periodic grid: initial patterns, Godunov
//! transport under a normal velocity and pseudo-time redistancing.
//!
//! Fields live on the `n x n` periodic nodes, row-major (`j * n + i`), the same
//! ordering as the mesh's periodic DOFs. Sign convention: negative inside the
//! sub-domain, positive outside.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::field;
use crate::mesh::UnitCellMesh;

/// Pseudo-time step of redistancing, in units of `Δx`.
pub const REINIT_CFL: f64 = 0.5;

/// Initial geometry of one level set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PatternSpec {
    /// `rows x cols` array of equal circles centered in the sub-cells.
    /// With `invert`, the sub-domain is the complement of the circles (holes).
    Circles {
        rows: usize,
        cols: usize,
        radius: f64,
        #[serde(default)]
        offset: [f64; 2],
        #[serde(default)]
        invert: bool,
    },
    /// `rows x cols` array of equal ellipses centered in the sub-cells, with
    /// semi-axes `(a, b)` along `(x, y)`. With `alternate`, every other ellipse
    /// (checkerboard) is turned by 90°, which gives rotating-square patterns.
    Ellipses {
        rows: usize,
        cols: usize,
        semi_axes: [f64; 2],
        #[serde(default)]
        alternate: bool,
        #[serde(default)]
        invert: bool,
    },
    /// Nested circles about the origin; the sub-domain is the disk inside
    /// `radii[0]`, then every other annulus.
    Concentric {
        radii: Vec<f64>,
        #[serde(default)]
        invert: bool,
    },
    /// `count` circles with uniformly drawn centers and radii, from the run seed.
    RandomCircles {
        count: usize,
        radius_min: f64,
        radius_max: f64,
        #[serde(default)]
        invert: bool,
    },
    /// No interface: the sub-domain is the whole cell (`inside`) or empty.
    Uniform { inside: bool },
    /// Nodal values read from a level-set file.
    File { path: PathBuf },
}

fn wrap(t: f64) -> f64 {
    t - t.round()
}

fn periodic_distance(p: [f64; 2], c: [f64; 2]) -> f64 {
    let dx = wrap(p[0] - c[0]);
    let dy = wrap(p[1] - c[1]);
    (dx * dx + dy * dy).sqrt()
}

fn circle_union(mesh: &UnitCellMesh, circles: &[([f64; 2], f64)], invert: bool) -> Vec<f64> {
    let sign = if invert { -1.0 } else { 1.0 };
    (0..mesh.periodic_dof_count())
        .map(|k| {
            let p = mesh.dof_coords(k);
            let d = circles
                .iter()
                .map(|&(c, r)| periodic_distance(p, c) - r)
                .fold(f64::INFINITY, f64::min);
            sign * d
        })
        .collect()
}

/// Nodal values of a pattern; `seed` drives [`PatternSpec::RandomCircles`].
pub fn init_pattern(spec: &PatternSpec, mesh: &UnitCellMesh, seed: u64) -> Result<Vec<f64>> {
    match spec {
        PatternSpec::Circles {
            rows,
            cols,
            radius,
            offset,
            invert,
        } => {
            if *rows == 0 || *cols == 0 || !(*radius > 0.0) {
                return Err(Error::Config(
                    "circle pattern needs rows, cols >= 1 and radius > 0".into(),
                ));
            }
            let mut circles = Vec::with_capacity(rows * cols);
            for r in 0..*rows {
                for c in 0..*cols {
                    let x = -0.5 + (c as f64 + 0.5) / *cols as f64 + offset[0];
                    let y = -0.5 + (r as f64 + 0.5) / *rows as f64 + offset[1];
                    circles.push(([x, y], *radius));
                }
            }
            Ok(circle_union(mesh, &circles, *invert))
        }
        PatternSpec::Ellipses {
            rows,
            cols,
            semi_axes: [a, b],
            alternate,
            invert,
        } => {
            if *rows == 0 || *cols == 0 || !(*a > 0.0 && *b > 0.0) {
                return Err(Error::Config(
                    "ellipse pattern needs rows, cols >= 1 and positive semi-axes".into(),
                ));
            }
            let mut ellipses = Vec::with_capacity(rows * cols);
            for r in 0..*rows {
                for c in 0..*cols {
                    let x = -0.5 + (c as f64 + 0.5) / *cols as f64;
                    let y = -0.5 + (r as f64 + 0.5) / *rows as f64;
                    let turned = *alternate && (r + c) % 2 == 1;
                    ellipses.push(([x, y], if turned { [*b, *a] } else { [*a, *b] }));
                }
            }
            let sign = if *invert { -1.0 } else { 1.0 };
            let scale = a.min(*b);
            // Not an exact distance; redistancing fixes everything but the zero contour.
            Ok((0..mesh.periodic_dof_count())
                .map(|k| {
                    let p = mesh.dof_coords(k);
                    let d = ellipses
                        .iter()
                        .map(|&(c, [ea, eb])| {
                            let (dx, dy) = (wrap(p[0] - c[0]) / ea, wrap(p[1] - c[1]) / eb);
                            (dx.hypot(dy) - 1.0) * scale
                        })
                        .fold(f64::INFINITY, f64::min);
                    sign * d
                })
                .collect())
        }
        PatternSpec::Concentric { radii, invert } => {
            if radii.is_empty() || radii.windows(2).any(|w| w[0] >= w[1]) || radii[0] <= 0.0 {
                return Err(Error::Config(
                    "concentric radii must be positive and strictly increasing".into(),
                ));
            }
            let sign = if *invert { -1.0 } else { 1.0 };
            Ok((0..mesh.periodic_dof_count())
                .map(|k| {
                    let rho = periodic_distance(mesh.dof_coords(k), [0.0, 0.0]);
                    let crossed = radii.iter().filter(|&&r| r < rho).count();
                    let dist = radii
                        .iter()
                        .map(|r| (rho - r).abs())
                        .fold(f64::INFINITY, f64::min);
                    let inside = crossed % 2 == 0;
                    sign * if inside { -dist } else { dist }
                })
                .collect())
        }
        PatternSpec::RandomCircles {
            count,
            radius_min,
            radius_max,
            invert,
        } => {
            if *count == 0 || !(*radius_min > 0.0 && radius_min <= radius_max) {
                return Err(Error::Config(
                    "random circles need count >= 1 and 0 < radius_min <= radius_max".into(),
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let circles: Vec<_> = (0..*count)
                .map(|_| {
                    let c = [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)];
                    let r = if radius_min == radius_max {
                        *radius_min
                    } else {
                        rng.random_range(*radius_min..*radius_max)
                    };
                    (c, r)
                })
                .collect();
            Ok(circle_union(mesh, &circles, *invert))
        }
        PatternSpec::Uniform { inside } => Ok(vec![if *inside { -1.0 } else { 1.0 }; mesh.n() * mesh.n()]),
        PatternSpec::File { path } => {
            let (n, values) = field::read_levelset(path)?;
            if n != mesh.n() {
                return Err(Error::Format {
                    path: path.clone(),
                    message: format!("level set is {n}x{n}, mesh is {0}x{0}", mesh.n()),
                });
            }
            Ok(values)
        }
    }
}

/// The pair `(φ1, φ2)` and the number of transport steps since they were last
/// redistanced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiLevelSet {
    n: usize,
    pub phi: [Vec<f64>; 2],
    pub since_reinit: usize,
}

impl MultiLevelSet {
    pub fn new(n: usize, phi1: Vec<f64>, phi2: Vec<f64>) -> Result<Self> {
        if phi1.len() != n * n || phi2.len() != n * n {
            return Err(Error::Config(format!("level sets must have {} values", n * n)));
        }
        Ok(Self {
            n,
            phi: [phi1, phi2],
            since_reinit: 0,
        })
    }

    pub fn from_patterns(mesh: &UnitCellMesh, specs: [&PatternSpec; 2], seed: u64) -> Result<Self> {
        let phi1 = init_pattern(specs[0], mesh, seed)?;
        let phi2 = init_pattern(specs[1], mesh, seed.wrapping_add(1))?;
        Self::new(mesh.n(), phi1, phi2)
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

#[inline]
fn at(phi: &[f64], n: usize, i: isize, j: isize) -> f64 {
    let n_i = n as isize;
    let ii = i.rem_euclid(n_i) as usize;
    let jj = j.rem_euclid(n_i) as usize;
    phi[jj * n + ii]
}

/// First-order one-sided differences `(D⁻x, D⁺x, D⁻y, D⁺y)` at node `(i, j)`.
#[inline]
fn one_sided(phi: &[f64], n: usize, dx: f64, i: usize, j: usize) -> [f64; 4] {
    let (i, j) = (i as isize, j as isize);
    let c = at(phi, n, i, j);
    [
        (c - at(phi, n, i - 1, j)) / dx,
        (at(phi, n, i + 1, j) - c) / dx,
        (c - at(phi, n, i, j - 1)) / dx,
        (at(phi, n, i, j + 1) - c) / dx,
    ]
}

/// Godunov approximation of `|∇φ|` for a front moving with positive
/// (`expanding`) or negative normal speed.
#[inline]
fn godunov(d: [f64; 4], expanding: bool) -> f64 {
    let axis = |dm: f64, dp: f64| {
        if expanding {
            dm.max(0.0).powi(2).max(dp.min(0.0).powi(2))
        } else {
            dm.min(0.0).powi(2).max(dp.max(0.0).powi(2))
        }
    };
    (axis(d[0], d[1]) + axis(d[2], d[3])).sqrt()
}

#[inline]
fn godunov_norm(phi: &[f64], n: usize, dx: f64, i: usize, j: usize, expanding: bool) -> f64 {
    godunov(one_sided(phi, n, dx, i, j), expanding)
}

/// Upwind `|∇φ|` for a front moving with the sign of `speed` at every node.
pub fn upwind_gradient_norm(phi: &[f64], n: usize, dx: f64, speed: &[f64]) -> Vec<f64> {
    (0..n * n)
        .map(|k| godunov_norm(phi, n, dx, k % n, k / n, speed[k] >= 0.0))
        .collect()
}

/// Central-difference `|∇φ|` at every node.
pub fn central_gradient_norm(phi: &[f64], n: usize, dx: f64) -> Vec<f64> {
    (0..n * n)
        .map(|k| {
            let (i, j) = ((k % n) as isize, (k / n) as isize);
            let gx = at(phi, n, i + 1, j) - at(phi, n, i - 1, j);
            let gy = at(phi, n, i, j + 1) - at(phi, n, i, j - 1);
            gx.hypot(gy) / (2.0 * dx)
        })
        .collect()
}

/// Largest stable transport step, `0.5 Δx / max|v|`.
pub fn cfl_timestep(v: &[f64], dx: f64) -> f64 {
    let vmax = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    0.5 * dx / vmax.max(1e-12)
}

/// One explicit step of `∂φ/∂t + v |∇φ| = 0`: positive `v` moves the zero
/// level set outward, growing `{φ < 0}`.
pub fn transport(phi: &[f64], v: &[f64], dt: f64, n: usize, dx: f64) -> Result<Vec<f64>> {
    let bound = cfl_timestep(v, dx);
    if dt > bound * (1.0 + 1e-12) {
        return Err(Error::CflViolation { dt, bound });
    }
    Ok((0..n * n)
        .into_par_iter()
        .with_min_len(1024)
        .map(|k| {
            let (i, j) = (k % n, k / n);
            let speed = v[k];
            if speed == 0.0 {
                return phi[k];
            }
            phi[k] - dt * speed * godunov_norm(phi, n, dx, i, j, speed > 0.0)
        })
        .collect())
}

/// Relative mismatch, against the local contour distance, below which an
/// interface node keeps its input value.
const PIN_TOLERANCE: f64 = 0.1;
/// Contour distances are floored at this fraction of `Δx` in that comparison,
/// so nodes almost on the interface are not renormalized by noise.
const PIN_FLOOR: f64 = 0.25;

fn point_segment_distance(p: [f64; 2], q: [f64; 2]) -> f64 {
    let d = [q[0] - p[0], q[1] - p[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        (-(p[0] * d[0] + p[1] * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] + t * d[0]).hypot(p[1] + t * d[1])
}

/// Distance from node `(i, j)` to the zero contour of the piecewise-linear
/// interpolant of `phi` on the mesh triangles of the four adjacent squares, or
/// `None` if the contour does not cross them.
fn contour_distance(phi: &[f64], n: usize, dx: f64, i: usize, j: usize) -> Option<f64> {
    let (i, j) = (i as isize, j as isize);
    let mut best = f64::INFINITY;
    for sj in [j - 1, j] {
        for si in [i - 1, i] {
            // corners relative to the node, in units of Δx
            let corner = |ci: isize, cj: isize| ([(ci - i) as f64, (cj - j) as f64], at(phi, n, ci, cj));
            let (a, b, c, d) = (
                corner(si, sj),
                corner(si + 1, sj),
                corner(si + 1, sj + 1),
                corner(si, sj + 1),
            );
            let tris = if (si + sj).rem_euclid(2) == 0 {
                [[a, b, c], [a, c, d]]
            } else {
                [[a, b, d], [b, c, d]]
            };
            for tri in tris {
                let mut pts = Vec::with_capacity(3);
                for (p, q) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])] {
                    if (p.1 < 0.0) != (q.1 < 0.0) {
                        let t = p.1 / (p.1 - q.1);
                        pts.push([p.0[0] + t * (q.0[0] - p.0[0]), p.0[1] + t * (q.0[1] - p.0[1])]);
                    }
                }
                if pts.len() == 2 {
                    best = best.min(point_segment_distance(pts[0], pts[1]));
                }
            }
        }
    }
    best.is_finite().then_some(best * dx)
}

/// Values held fixed at nodes next to the zero level set (a sign change within
/// the 8-neighborhood), so that redistancing does not move the interface.
///
/// The held value is the node's distance to the local piecewise-linear zero
/// contour, except when the input is already close to it (see
/// [`PIN_TOLERANCE`]), in which case the input is kept. A second pass therefore
/// leaves a redistanced interface untouched.
fn interface_targets(phi: &[f64], n: usize, dx: f64) -> Vec<Option<f64>> {
    (0..n * n)
        .map(|k| {
            let (i, j) = (k % n, k / n);
            let c = phi[k];
            let (ii, jj) = (i as isize, j as isize);
            let near_interface = (-1..=1)
                .flat_map(|dj| (-1..=1).map(move |di| (di, dj)))
                .any(|(di, dj)| at(phi, n, ii + di, jj + dj) * c < 0.0);
            if c == 0.0 {
                return Some(0.0);
            }
            if !near_interface {
                return None;
            }
            let Some(dist) = contour_distance(phi, n, dx, i, j) else {
                return Some(c);
            };
            if (c.abs() - dist).abs() <= PIN_TOLERANCE * dist.max(PIN_FLOOR * dx) {
                Some(c)
            } else {
                Some(c.signum() * dist)
            }
        })
        .collect()
}

/// Evolves `∂d/∂t + S(φ)(|∇d| - 1) = 0` from `d = φ` for `steps` pseudo-time
/// steps of `0.5 Δx`, with `S(φ) = φ / sqrt(φ² + Δx²)`. Nodes next to the
/// zero level set are pinned (see [`interface_targets`]).
pub fn reinitialize(phi: &[f64], steps: usize, n: usize, dx: f64) -> Result<Vec<f64>> {
    let has_neg = phi.iter().any(|&v| v < 0.0);
    let has_pos = phi.iter().any(|&v| v > 0.0);
    if !(has_neg && has_pos) {
        return Err(Error::DegenerateLevelSet(0));
    }
    let sign: Vec<f64> = phi.iter().map(|&p| p / (p * p + dx * dx).sqrt()).collect();
    let pinned = interface_targets(phi, n, dx);
    let dt = REINIT_CFL * dx;
    let mut d: Vec<f64> = phi
        .iter()
        .zip(&pinned)
        .map(|(&p, t)| t.unwrap_or(p))
        .collect();
    let mut next = vec![0.0; n * n];
    for _ in 0..steps {
        next.par_iter_mut()
            .with_min_len(1024)
            .enumerate()
            .for_each(|(k, out)| {
                *out = match pinned[k] {
                    Some(t) => t,
                    None => {
                        let s = sign[k];
                        let g = godunov_norm(&d, n, dx, k % n, k / n, s > 0.0);
                        d[k] - dt * s * (g - 1.0)
                    }
                };
            });
        std::mem::swap(&mut d, &mut next);
    }
    Ok(d)
}

/// Redistances both level sets, skipping (and reporting) any that has a single sign.
pub fn reinitialize_pair(ls: &mut MultiLevelSet, steps: usize, dx: f64) -> Vec<usize> {
    let n = ls.n;
    let mut skipped = Vec::new();
    for (idx, phi) in ls.phi.iter_mut().enumerate() {
        match reinitialize(phi, steps, n, dx) {
            Ok(d) => *phi = d,
            Err(_) => skipped.push(idx + 1),
        }
    }
    ls.since_reinit = 0;
    skipped
}

/// Like [`reinitialize_pair`], but the nodes of every element whose
/// barycentric value lies within `band` of zero keep their values. With `band`
/// the interface half-width, the smoothed material and the phase volumes
/// (which only vary on those elements) are left as they were, while the far
/// field is restored to a distance function.
pub fn reinitialize_pair_outside_band(ls: &mut MultiLevelSet, steps: usize, mesh: &UnitCellMesh, band: f64) -> Vec<usize> {
    let original = ls.phi.clone();
    let skipped = reinitialize_pair(ls, steps, mesh.dx());
    for (phi, old) in ls.phi.iter_mut().zip(&original) {
        for e in 0..mesh.elements().len() {
            if mesh.barycentric(e, old).abs() < band {
                for &dof in &mesh.elements()[e].dofs {
                    phi[dof] = old[dof];
                }
            }
        }
    }
    skipped
}
