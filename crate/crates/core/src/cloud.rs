//! Point-cloud approximation of the CDF graph for plotting.
//!
//! Starts from `n_initial` evenly spaced points on `[1/3, 2/3]` at height
//! `1/(p+1)` plus `(0, 0)` and `(1, 1)`. Each iteration replaces the set `S`
//! by the union of three copies: `S` shrunk toward the origin
//! (`x/3`, `F/(p+1)`), `S` itself, and the flip of the shrunk copy
//! (`1 - x/3`, `1 - F p/(p+1)`). Points with identical `x` are merged,
//! keeping the first occurrence in that order.
//!
//! The cloud grows by roughly `n_initial * 2^iterations` points per
//! iteration, so [`point_cloud`] refuses to materialise more than
//! [`CloudOptions::max_points`] points. [`CloudStream`] produces the same
//! sequence in sorted order with memory proportional to `n_initial +
//! iterations`, which makes clouds far beyond the cap traversable.

use std::io::Write;
use std::ops::ControlFlow;

use serde::{Serialize, Serializer};

use crate::distribution::PSingularParams;
use crate::error::{Error, Result};
use crate::output::{write_csv_pairs, JsonPairWriter};

/// Default cap on a materialised cloud.
pub const DEFAULT_MAX_POINTS: usize = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CloudOptions {
    pub max_points: usize,
}

impl Default for CloudOptions {
    fn default() -> Self {
        Self {
            max_points: DEFAULT_MAX_POINTS,
        }
    }
}

/// Sorted `(x, F)` pairs approximating the graph of `F_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<(f64, f64)>,
    pub p: f64,
    pub iterations: u32,
    pub n_initial: usize,
}

impl Serialize for PointCloud {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.points.serialize(serializer)
    }
}

impl PointCloud {
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        write_csv_pairs(out, ("x", "F"), self.points.iter().copied())?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: &mut W) -> Result<()> {
        let mut w = JsonPairWriter::new(out)?;
        for &(x, f) in &self.points {
            w.push(x, f)?;
        }
        w.finish()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Map {
    Shrink,
    Flip,
}

impl Map {
    /// Position of the copy in the concatenation shrunk / original / flipped.
    fn rank(self) -> u8 {
        match self {
            Map::Shrink => 0,
            Map::Flip => 2,
        }
    }
}

/// Whether the point built along `a` precedes the one built along `b` in the
/// concatenation order of the node where their paths split. Every point ends
/// its path in the original copy (rank 1), and no path is a prefix of another.
fn path_precedes(a: &[Map], b: &[Map]) -> bool {
    let ranks = |m: &[Map]| {
        m.iter()
            .map(|m| m.rank())
            .chain(std::iter::once(1))
            .collect::<Vec<u8>>()
    };
    ranks(a) < ranks(b)
}

/// Lazily enumerated point cloud.
#[derive(Debug, Clone)]
pub struct CloudStream {
    params: PSingularParams,
    n_initial: usize,
    iterations: u32,
    plateau: Vec<f64>,
    height: f64,
}

impl CloudStream {
    pub fn new(params: &PSingularParams, n_initial: usize, iterations: u32) -> Result<Self> {
        if n_initial < 2 {
            return Err(Error::Parameter(format!(
                "n_initial must be at least 2, got {n_initial}"
            )));
        }
        if iterations > 60 {
            return Err(Error::Resource(format!(
                "{iterations} iterations is beyond any usable cloud"
            )));
        }
        Ok(Self {
            params: *params,
            n_initial,
            iterations,
            plateau: linspace(1.0 / 3.0, 2.0 / 3.0, n_initial),
            height: 1.0 / (params.p() + 1.0),
        })
    }

    pub fn params(&self) -> &PSingularParams {
        &self.params
    }

    pub fn n_initial(&self) -> usize {
        self.n_initial
    }

    pub fn iterations(&self) -> u32 {
        self.iterations
    }

    /// Number of points before merging duplicates:
    /// `2^k (2n + 2) - n` for `n` initial points and `k` iterations.
    pub fn raw_len(&self) -> u128 {
        let n = self.n_initial as u128;
        (1u128 << self.iterations) * (2 * n + 2) - n
    }

    /// Visits every point in increasing `x`; stops early on `Break`.
    ///
    /// Copies of the same `x` arrive next to each other. The one kept is the
    /// first in concatenation order at the iteration that produced both,
    /// which inside a flipped copy is the later one emitted.
    pub fn try_for_each<F>(&self, mut visit: F) -> ControlFlow<()>
    where
        F: FnMut(f64, f64) -> ControlFlow<()>,
    {
        let mut pending: Option<(f64, f64)> = None;
        let mut pending_path: Vec<Map> = Vec::with_capacity(self.iterations as usize);
        let mut sink = |x: f64, f: f64, path: &[Map]| {
            if let Some((px, pf)) = pending.as_mut() {
                if x == *px {
                    if path_precedes(path, &pending_path) {
                        *pf = f;
                        pending_path.clear();
                        pending_path.extend_from_slice(path);
                    }
                    return ControlFlow::Continue(());
                }
                visit(*px, *pf)?;
            }
            pending = Some((x, f));
            pending_path.clear();
            pending_path.extend_from_slice(path);
            ControlFlow::Continue(())
        };
        let mut stack = Vec::with_capacity(self.iterations as usize);
        self.walk(self.iterations, &mut stack, false, &mut sink)?;
        match pending {
            Some((x, f)) => visit(x, f),
            None => ControlFlow::Continue(()),
        }
    }

    pub fn for_each<F: FnMut(f64, f64)>(&self, mut visit: F) {
        let _ = self.try_for_each(|x, f| {
            visit(x, f);
            ControlFlow::Continue(())
        });
    }

    /// Exact number of distinct points; traverses the whole cloud.
    pub fn count(&self) -> u64 {
        let mut n = 0u64;
        self.for_each(|_, _| n += 1);
        n
    }

    fn emit<S>(&self, stack: &[Map], x0: f64, f0: f64, sink: &mut S) -> ControlFlow<()>
    where
        S: FnMut(f64, f64, &[Map]) -> ControlFlow<()>,
    {
        let p1 = self.params.p() + 1.0;
        let flip = self.params.p() / p1;
        let (mut x, mut f) = (x0, f0);
        // The innermost map was pushed last.
        for map in stack.iter().rev() {
            match map {
                Map::Shrink => {
                    x /= 3.0;
                    f /= p1;
                }
                Map::Flip => {
                    x = 1.0 - x / 3.0;
                    f = 1.0 - f * flip;
                }
            }
        }
        sink(x, f, stack)
    }

    fn emit_plateau<S>(&self, stack: &[Map], reversed: bool, sink: &mut S) -> ControlFlow<()>
    where
        S: FnMut(f64, f64, &[Map]) -> ControlFlow<()>,
    {
        if reversed {
            for &y in self.plateau.iter().rev() {
                self.emit(stack, y, self.height, sink)?;
            }
        } else {
            for &y in &self.plateau {
                self.emit(stack, y, self.height, sink)?;
            }
        }
        ControlFlow::Continue(())
    }

    fn walk<S>(&self, level: u32, stack: &mut Vec<Map>, reversed: bool, sink: &mut S) -> ControlFlow<()>
    where
        S: FnMut(f64, f64, &[Map]) -> ControlFlow<()>,
    {
        if level == 0 {
            let (first, last) = if reversed {
                ((1.0, 1.0), (0.0, 0.0))
            } else {
                ((0.0, 0.0), (1.0, 1.0))
            };
            self.emit(stack, first.0, first.1, sink)?;
            self.emit_plateau(stack, reversed, sink)?;
            return self.emit(stack, last.0, last.1, sink);
        }
        // Forward order is shrunk copy, plateau, reversed flipped copy.
        let (outer, inner) = if reversed {
            (Map::Flip, Map::Shrink)
        } else {
            (Map::Shrink, Map::Flip)
        };
        stack.push(outer);
        let r = self.walk(level - 1, stack, false, sink);
        stack.pop();
        r?;
        self.emit_plateau(stack, reversed, sink)?;
        stack.push(inner);
        let r = self.walk(level - 1, stack, true, sink);
        stack.pop();
        r
    }
}

/// `n` evenly spaced values from `a` to `b` inclusive; the last is exactly `b`.
fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let step = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { b } else { a + i as f64 * step })
        .collect()
}

/// Materialises the cloud, failing with a resource error once it would
/// exceed `options.max_points`.
pub fn point_cloud_with(
    params: &PSingularParams,
    n_initial: usize,
    iterations: u32,
    options: CloudOptions,
) -> Result<PointCloud> {
    let stream = CloudStream::new(params, n_initial, iterations)?;
    let mut points = Vec::with_capacity(stream.raw_len().min(options.max_points as u128) as usize);
    let flow = stream.try_for_each(|x, f| {
        if points.len() == options.max_points {
            return ControlFlow::Break(());
        }
        points.push((x, f));
        ControlFlow::Continue(())
    });
    if flow.is_break() {
        return Err(Error::Resource(format!(
            "point cloud with n_initial = {n_initial} and {iterations} iterations exceeds the cap of {} points \
             (about {} before merging)",
            options.max_points,
            stream.raw_len()
        )));
    }
    Ok(PointCloud {
        points,
        p: params.p(),
        iterations,
        n_initial,
    })
}

/// [`point_cloud_with`] under the default cap.
pub fn point_cloud(params: &PSingularParams, n_initial: usize, iterations: u32) -> Result<PointCloud> {
    point_cloud_with(params, n_initial, iterations, CloudOptions::default())
}
