//! Grid fields `f(v)` on a cube centered at the origin: trilinear
//! interpolation, the weighted sup-norm, moments, equilibria and snapshot
//! files.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kinematics::lift_raw;
use crate::momentum::{Momentum3, Vec3};

pub const MIN_POINTS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VGrid {
    pub vmax: f64,
    pub n: usize,
}

impl VGrid {
    pub fn new(vmax: f64, n: usize) -> Result<Self> {
        if !(vmax > 0.0 && vmax.is_finite()) {
            return Err(invalid(format!("grid.vmax must be positive, got {vmax}")));
        }
        if n < MIN_POINTS {
            return Err(invalid(format!("grid.n must be at least {MIN_POINTS}, got {n}")));
        }
        Ok(Self { vmax, n })
    }

    #[inline]
    pub fn h(&self) -> f64 {
        2.0 * self.vmax / (self.n - 1) as f64
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.vmax + i as f64 * self.h()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat index with the first axis slowest.
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    #[inline]
    pub fn unflatten(&self, idx: usize) -> (usize, usize, usize) {
        (idx / (self.n * self.n), (idx / self.n) % self.n, idx % self.n)
    }

    #[inline]
    pub fn node(&self, idx: usize) -> Vec3 {
        let (i, j, k) = self.unflatten(idx);
        Vec3::new(self.coord(i), self.coord(j), self.coord(k))
    }

    /// Per-axis trapezoid weight.
    #[inline]
    pub fn trapezoid_weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n - 1 {
            0.5 * self.h()
        } else {
            self.h()
        }
    }

    /// Trapezoid cell weight of a node, `h³` in the interior.
    #[inline]
    pub fn cell_weight(&self, idx: usize) -> f64 {
        let (i, j, k) = self.unflatten(idx);
        self.trapezoid_weight(i) * self.trapezoid_weight(j) * self.trapezoid_weight(k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumParams {
    pub alpha: f64,
    pub beta: Vec3,
    pub gamma: f64,
}

impl EquilibriumParams {
    /// `γ > R|β|` keeps `α + β·v − γv⁰` bounded above since `v⁰ ≥ |v|/R`.
    pub fn check_bounded(&self, r: f64) -> Result<()> {
        if !(self.gamma > 0.0) {
            return Err(invalid(format!("equilibrium gamma must be positive, got {}", self.gamma)));
        }
        if self.gamma <= r * self.beta.norm() {
            return Err(invalid(format!(
                "equilibrium unbounded at R = {r}: gamma = {} ≤ R|beta| = {}",
                self.gamma,
                r * self.beta.norm()
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn value(&self, v: &Vec3, r: f64) -> f64 {
        (self.alpha + self.beta.dot(v) - self.gamma * lift_raw(v, r)).exp()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mass: f64,
    pub momentum: [f64; 3],
    pub energy: f64,
}

/// Trilinear interpolation with the grid constants hoisted out.
#[derive(Clone, Copy)]
pub struct Interpolator<'a> {
    values: &'a [f64],
    n: usize,
    vmax: f64,
    inv_h: f64,
    last: f64,
}

impl Interpolator<'_> {
    /// Cell index and offset along one axis; offsets within 1e-10 of a
    /// node are snapped so that nodes are reproduced exactly.
    #[inline(always)]
    fn locate(&self, x: f64) -> (usize, f64) {
        let x = x.clamp(0.0, self.last);
        // Truncation is floor here and avoids a libm call.
        let mut i = x as usize;
        let mut t = x - i as f64;
        if t < 1e-10 {
            t = 0.0;
        } else if t > 1.0 - 1e-10 {
            i += 1;
            t = 0.0;
        }
        if i == self.n - 1 {
            i -= 1;
            t = 1.0;
        }
        (i, t)
    }

    #[inline]
    pub fn eval(&self, v: &Vec3) -> f64 {
        let lo = -1e-10;
        let hi = self.last + 1e-10;
        let (x, y, z) =
            ((v.x + self.vmax) * self.inv_h, (v.y + self.vmax) * self.inv_h, (v.z + self.vmax) * self.inv_h);
        if !(x >= lo && x <= hi && y >= lo && y <= hi && z >= lo && z <= hi) {
            return 0.0;
        }
        let (i, fx) = self.locate(x);
        let (j, fy) = self.locate(y);
        let (k, fz) = self.locate(z);
        let n = self.n;
        let base = (i * n + j) * n + k;
        let c = self.values;
        let lerp = |a: f64, b: f64, t: f64| (1.0 - t) * a + t * b;
        let c00 = lerp(c[base], c[base + n * n], fx);
        let c01 = lerp(c[base + 1], c[base + n * n + 1], fx);
        let c10 = lerp(c[base + n], c[base + n * n + n], fx);
        let c11 = lerp(c[base + n + 1], c[base + n * n + n + 1], fx);
        lerp(lerp(c00, c10, fy), lerp(c01, c11, fy), fz)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistributionField {
    pub grid: VGrid,
    pub values: Vec<f64>,
}

impl DistributionField {
    pub fn zeros(grid: VGrid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: VGrid, f: impl Fn(&Vec3) -> f64) -> Self {
        let values = (0..grid.len()).map(|idx| f(&grid.node(idx))).collect();
        Self { grid, values }
    }

    pub fn from_values(grid: VGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(format!("expected {} values, got {}", grid.len(), values.len())));
        }
        Ok(Self { grid, values })
    }

    /// Errors on negative or non-finite values.
    pub fn check_nonnegative(&self) -> Result<()> {
        match self.values.iter().position(|x| !(*x >= 0.0 && x.is_finite())) {
            None => Ok(()),
            Some(i) => {
                Err(invalid(format!("field value {} at node {i} is not a finite nonnegative number", self.values[i])))
            }
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|x| a * x).collect() }
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(*x))
    }

    pub fn interpolate(&self, v: &Momentum3) -> f64 {
        self.interpolate_vec(v.vec())
    }

    /// Trilinear interpolation; zero outside the cube.
    #[inline]
    pub fn interpolate_vec(&self, v: &Vec3) -> f64 {
        self.interpolator().eval(v)
    }

    pub fn interpolator(&self) -> Interpolator<'_> {
        let g = &self.grid;
        Interpolator { values: &self.values, n: g.n, vmax: g.vmax, inv_h: 1.0 / g.h(), last: (g.n - 1) as f64 }
    }

    /// First difference along `axis` at a node: central inside, one-sided
    /// at the faces.
    #[inline]
    fn difference(&self, idx: usize, axis: usize) -> f64 {
        let g = &self.grid;
        let (i, j, k) = g.unflatten(idx);
        let pos = [i, j, k][axis];
        let stride = [g.n * g.n, g.n, 1][axis];
        let h = g.h();
        if pos == 0 {
            (self.values[idx + stride] - self.values[idx]) / h
        } else if pos == g.n - 1 {
            (self.values[idx] - self.values[idx - stride]) / h
        } else {
            (self.values[idx + stride] - self.values[idx - stride]) / (2.0 * h)
        }
    }

    /// `max_v e^{|v|²}|f|`, the decay certificate.
    pub fn decay_certificate(&self) -> f64 {
        self.weighted_sup(0.0, 1.0)
    }

    /// `max_v e^{γ|v|²}|f|` shifted by `e^{−shift}` to stay in range.
    pub(crate) fn weighted_sup(&self, shift: f64, gamma: f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .fold(0.0, |m, (idx, x)| m.max((gamma * self.grid.node(idx).norm_squared() - shift).exp() * x.abs()))
    }

    /// Instantaneous weighted norm: `max e^{|v|²}|D^j f|` over nodes,
    /// `j ∈ {0, 1}` and the three axes, derivatives by finite differences.
    pub fn weighted_norm(&self) -> f64 {
        let mut m: f64 = 0.0;
        for idx in 0..self.grid.len() {
            let w = self.grid.node(idx).norm_squared().exp();
            m = m.max(w * self.values[idx].abs());
            for axis in 0..3 {
                m = m.max(w * self.difference(idx, axis).abs());
            }
        }
        m
    }

    /// Trapezoid integrals of `f`, `v f` and `v⁰ f` at scale factor `r`.
    pub fn moments(&self, r: f64) -> Moments {
        let mut out = Moments::default();
        for (idx, &f) in self.values.iter().enumerate() {
            if f == 0.0 {
                continue;
            }
            let w = self.grid.cell_weight(idx) * f;
            let v = self.grid.node(idx);
            out.mass += w;
            out.momentum[0] += w * v.x;
            out.momentum[1] += w * v.y;
            out.momentum[2] += w * v.z;
            out.energy += w * lift_raw(&v, r);
        }
        out
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().enumerate().map(|(idx, f)| self.grid.cell_weight(idx) * f).sum()
    }

    /// Trapezoid integral of `f ln f` with `0 ln 0 = 0`.
    pub fn entropy(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, f)| **f > 0.0)
            .map(|(idx, f)| self.grid.cell_weight(idx) * f * f.ln())
            .sum()
    }

    pub fn equilibrium(params: &EquilibriumParams, r: f64, grid: VGrid) -> Result<Self> {
        crate::kinematics::check_scale(r)?;
        params.check_bounded(r)?;
        Ok(Self::from_fn(grid, |v| params.value(v, r)))
    }

    /// `ε e^{−width·|v|²}` together with its weighted norm.
    pub fn gaussian_initial_data(eps: f64, width: f64, grid: VGrid) -> Result<(Self, f64)> {
        if !(width > 1.0) {
            return Err(invalid(format!("Gaussian width must exceed 1, got {width}")));
        }
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(invalid(format!("epsilon must be finite and nonnegative, got {eps}")));
        }
        let f = Self::from_fn(grid, |v| eps * (-width * v.norm_squared()).exp());
        let norm = f.weighted_norm();
        Ok((f, norm))
    }

    /// Writes `t,v1,v2,v3,f` rows for every `stride`-th node per axis.
    pub fn write_csv<W: Write>(&self, t: f64, stride: usize, out: W) -> Result<()> {
        let stride = stride.max(1);
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "v1", "v2", "v3", "f"])?;
        let n = self.grid.n;
        let ts = t.to_string();
        for i in (0..n).step_by(stride) {
            for j in (0..n).step_by(stride) {
                for k in (0..n).step_by(stride) {
                    let idx = self.grid.index(i, j, k);
                    let v = self.grid.node(idx);
                    w.write_record([
                        ts.clone(),
                        v.x.to_string(),
                        v.y.to_string(),
                        v.z.to_string(),
                        self.values[idx].to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, t: f64, stride: usize, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(t, stride, std::io::BufWriter::new(file))
    }

    /// Reads a full (undecimated) snapshot; returns the field and its time.
    pub fn read_csv<R: Read>(input: R) -> Result<(Self, f64)> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut rows: Vec<[f64; 5]> = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 5 {
                return Err(Error::Config { line: line + 2, msg: format!("expected 5 columns, got {}", rec.len()) });
            }
            let mut row = [0.0; 5];
            for (slot, cell) in row.iter_mut().zip(rec.iter()) {
                *slot = cell
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config { line: line + 2, msg: format!("not a number: {cell:?}") })?;
            }
            rows.push(row);
        }
        let count = rows.len();
        let n = (count as f64).cbrt().round() as usize;
        if n * n * n != count || n < MIN_POINTS {
            return Err(invalid(format!("snapshot has {count} rows, not a full n³ grid with n ≥ {MIN_POINTS}")));
        }
        let vmax = -rows[0][1];
        let grid = VGrid::new(vmax, n)?;
        let t = rows[0][0];
        let mut values = vec![0.0; grid.len()];
        for (idx, row) in rows.iter().enumerate() {
            let node = grid.node(idx);
            let tol = 1e-9 * vmax;
            if (node.x - row[1]).abs() > tol || (node.y - row[2]).abs() > tol || (node.z - row[3]).abs() > tol {
                return Err(invalid(format!("snapshot row {} is not at grid node {idx}", idx + 2)));
            }
            values[idx] = row[4];
        }
        Ok((Self { grid, values }, t))
    }

    pub fn read_csv_file(path: &Path) -> Result<(Self, f64)> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}
