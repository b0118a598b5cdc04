//! Phase screens on a square (or single-row) pixel grid.
//!
//! Pixel `(row, col)` sits at integer coordinates; a [`Center`] is a real
//! point `(cx, cy)` with `cx` along columns and `cy` along rows. Point
//! inversion about a center maps a pixel to `round(2c - p)` on each axis,
//! with exact halves rounding toward the lower index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genome::SlmGenome;

/// Whether a grid is a full `n x n` square or a `1 x n` line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    #[default]
    Square,
    Line,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    pitch: f64,
    layout: Layout,
}

impl GridSpec {
    pub fn new(n: usize, pitch: f64) -> Result<Self> {
        Self::with_layout(n, pitch, Layout::Square)
    }

    pub fn line(n: usize, pitch: f64) -> Result<Self> {
        Self::with_layout(n, pitch, Layout::Line)
    }

    pub fn with_layout(n: usize, pitch: f64, layout: Layout) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::config(format!("grid size must be even and >= 8, got {n}")));
        }
        if !(pitch > 0.0 && pitch.is_finite()) {
            return Err(Error::config(format!("grid pitch must be positive, got {pitch}")));
        }
        Ok(GridSpec { n, pitch, layout })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn rows(&self) -> usize {
        match self.layout {
            Layout::Square => self.n,
            Layout::Line => 1,
        }
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.rows() * self.cols()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Momentum coordinate of a column (or row) index, `(i - n/2) * pitch`.
    pub fn momentum(&self, index: usize) -> f64 {
        (index as f64 - (self.n / 2) as f64) * self.pitch
    }

    /// Geometric midpoint of the pixel array. Inversion about it maps the
    /// grid onto itself exactly.
    pub fn midpoint(&self) -> Center {
        let mid = (self.n - 1) as f64 / 2.0;
        match self.layout {
            Layout::Square => Center::new(mid, mid),
            Layout::Line => Center::new(mid, 0.0),
        }
    }

    /// True when `c` lies inside the pixel array (inclusive of edge pixels).
    pub fn contains(&self, c: Center) -> bool {
        let max_x = (self.cols() - 1) as f64;
        let max_y = (self.rows() - 1) as f64;
        c.is_finite() && c.cx >= 0.0 && c.cx <= max_x && c.cy >= 0.0 && c.cy <= max_y
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols() + col
    }

    /// Linear index of the inversion image of `(row, col)` about `c`, if it
    /// falls on the grid.
    pub fn mirror(&self, row: usize, col: usize, c: Center) -> Option<usize> {
        let mr = mirror_coord(row as f64, c.cy, self.rows())?;
        let mc = mirror_coord(col as f64, c.cx, self.cols())?;
        Some(self.index(mr, mc))
    }
}

/// Round to nearest, exact halves toward the lower value.
pub(crate) fn round_half_down(v: f64) -> f64 {
    let f = v.floor();
    if v - f > 0.5 {
        f + 1.0
    } else {
        f
    }
}

pub(crate) fn mirror_coord(i: f64, c: f64, len: usize) -> Option<usize> {
    let m = round_half_down(2.0 * c - i);
    if m >= 0.0 && m < len as f64 {
        Some(m as usize)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Center {
    pub cx: f64,
    pub cy: f64,
}

impl Center {
    pub const fn new(cx: f64, cy: f64) -> Self {
        Center { cx, cy }
    }

    pub fn is_finite(&self) -> bool {
        self.cx.is_finite() && self.cy.is_finite()
    }

    pub fn offset(&self, dx: f64, dy: f64) -> Self {
        Center::new(self.cx + dx, self.cy + dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ZernikeKind {
    ComaX,
    ComaY,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseScreen {
    spec: GridSpec,
    values: Vec<f64>,
}

impl PhaseScreen {
    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::config(format!(
                "screen needs {} values, got {}",
                spec.len(),
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite phase at index {bad}")));
        }
        Ok(PhaseScreen { spec, values })
    }

    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(spec.len());
        for row in 0..spec.rows() {
            for col in 0..spec.cols() {
                values.push(f(row, col));
            }
        }
        PhaseScreen { spec, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[self.spec.index(row, col)]
    }

    /// Elementwise sum. Screens must share a grid.
    pub fn add(&self, other: &PhaseScreen) -> Result<PhaseScreen> {
        if self.spec != other.spec {
            return Err(Error::config("cannot add screens on different grids"));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(PhaseScreen { spec: self.spec, values })
    }

    pub fn scale(&self, factor: f64) -> PhaseScreen {
        PhaseScreen {
            spec: self.spec,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Sum of squared values.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

pub fn make_screen(spec: GridSpec, fill: f64) -> Result<PhaseScreen> {
    if !fill.is_finite() {
        return Err(Error::domain("fill value must be finite"));
    }
    Ok(PhaseScreen {
        spec,
        values: vec![fill; spec.len()],
    })
}

/// Split a screen into parts even and odd under inversion about `c`.
///
/// Pixels whose mirror falls off the grid keep their full value in the
/// even part and zero in the odd part.
pub fn parity_decompose(s: &PhaseScreen, c: Center) -> Result<(PhaseScreen, PhaseScreen)> {
    let spec = s.spec;
    if !spec.contains(c) {
        return Err(Error::domain(format!(
            "center ({}, {}) is outside the {}x{} grid",
            c.cx,
            c.cy,
            spec.rows(),
            spec.cols()
        )));
    }
    let mut even = vec![0.0; spec.len()];
    let mut odd = vec![0.0; spec.len()];
    for row in 0..spec.rows() {
        for col in 0..spec.cols() {
            let i = spec.index(row, col);
            match spec.mirror(row, col, c) {
                Some(m) => {
                    even[i] = (s.values[i] + s.values[m]) / 2.0;
                    odd[i] = (s.values[i] - s.values[m]) / 2.0;
                }
                None => even[i] = s.values[i],
            }
        }
    }
    Ok((
        PhaseScreen { spec, values: even },
        PhaseScreen { spec, values: odd },
    ))
}

/// Value of a coma term at pixel `(row, col)`; zero outside the unit disk.
///
/// Written as `(3 rho^2 - 2) * dx / r`, which equals `(3 rho^3 - 2 rho) cos(theta)`
/// and flips sign exactly under `dx -> -dx, dy -> -dy`.
pub fn zernike_value(kind: ZernikeKind, r: f64, c: Center, amplitude: f64, row: usize, col: usize) -> f64 {
    let dx = col as f64 - c.cx;
    let dy = row as f64 - c.cy;
    let rho2 = (dx * dx + dy * dy) / (r * r);
    if rho2 > 1.0 {
        return 0.0;
    }
    let lever = match kind {
        ZernikeKind::ComaX => dx / r,
        ZernikeKind::ComaY => dy / r,
    };
    amplitude * (3.0 * rho2 - 2.0) * lever
}

pub fn zernike_screen(spec: GridSpec, kind: ZernikeKind, r: f64, c: Center, amplitude: f64) -> Result<PhaseScreen> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::domain(format!("zernike radius must be positive, got {r}")));
    }
    if !c.is_finite() || !amplitude.is_finite() {
        return Err(Error::domain("zernike center and amplitude must be finite"));
    }
    Ok(PhaseScreen::from_fn(spec, |row, col| {
        zernike_value(kind, r, c, amplitude, row, col)
    }))
}

/// Paint each super-pixel's level `l` as phase `2 pi l / L` over its block.
pub fn expand_genome(g: &SlmGenome, spec: GridSpec) -> Result<PhaseScreen> {
    let (br, bc) = g.block();
    if g.rows() * br != spec.rows() || g.cols() * bc != spec.cols() {
        return Err(Error::config(format!(
            "genome {}x{} with {}x{} blocks does not tile a {}x{} grid",
            g.rows(),
            g.cols(),
            br,
            bc,
            spec.rows(),
            spec.cols()
        )));
    }
    let step = std::f64::consts::TAU / f64::from(g.num_levels());
    Ok(PhaseScreen::from_fn(spec, |row, col| {
        f64::from(g.level(row / br, col / bc)) * step
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::Symmetry;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn spec(n: usize) -> GridSpec {
        GridSpec::new(n, 1.0).unwrap()
    }

    #[test]
    fn make_screen_fills() {
        let s = make_screen(spec(64), 0.0).unwrap();
        assert_eq!(s.values().len(), 64 * 64);
        assert!(s.values().iter().all(|&v| v == 0.0));
        let s = make_screen(GridSpec::new(8, 0.5).unwrap(), PI).unwrap();
        assert!(s.values().iter().all(|&v| v == PI));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(GridSpec::new(7, 1.0), Err(Error::Config(_))));
        assert!(matches!(GridSpec::new(6, 1.0), Err(Error::Config(_))));
        assert!(matches!(GridSpec::new(8, 0.0), Err(Error::Config(_))));
        assert!(matches!(GridSpec::new(8, -1.0), Err(Error::Config(_))));
    }

    #[test]
    fn mirror_rounds_halves_down() {
        let g = spec(16);
        // 2 * 3.25 - 0 = 6.5 -> 6
        assert_eq!(g.mirror(0, 0, Center::new(3.25, 3.25)), Some(g.index(6, 6)));
        // 2 * 3.3 - 0 = 6.6 -> 7
        assert_eq!(g.mirror(0, 0, Center::new(3.3, 3.3)), Some(g.index(7, 7)));
        assert_eq!(g.mirror(0, 0, Center::new(9.0, 9.0)), None);
    }

    #[test]
    fn parity_of_symmetric_and_ramp() {
        let g = spec(32);
        let c = g.midpoint();
        let sym = PhaseScreen::from_fn(g, |r, col| {
            let dx = col as f64 - c.cx;
            let dy = r as f64 - c.cy;
            (dx * dx + dy * dy).sqrt().cos()
        });
        let (_, odd) = parity_decompose(&sym, c).unwrap();
        assert!(odd.max_abs() < 1e-15);

        let ramp = PhaseScreen::from_fn(g, |r, col| 0.3 * (col as f64 - c.cx) - 0.7 * (r as f64 - c.cy));
        let (even, _) = parity_decompose(&ramp, c).unwrap();
        assert!(even.max_abs() < 1e-14);
    }

    #[test]
    fn parity_random_screen_against_pixel_loop() {
        let g = spec(24);
        let c = g.midpoint();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let s = PhaseScreen::from_fn(g, |_, _| rng.random_range(-5.0..5.0));
        let (even, odd) = parity_decompose(&s, c).unwrap();
        let n = g.n();
        for r in 0..n {
            for col in 0..n {
                // Midpoint inversion is (r, c) -> (n-1-r, n-1-c).
                let (mr, mc) = (n - 1 - r, n - 1 - col);
                assert_eq!(even.get(r, col), even.get(mr, mc));
                assert_eq!(odd.get(r, col), -odd.get(mr, mc));
                let sum = even.get(r, col) + odd.get(r, col);
                assert!((sum - s.get(r, col)).abs() <= 4.0 * f64::EPSILON * 5.0);
            }
        }
    }

    #[test]
    fn parity_edge_rule_and_center_check() {
        let g = spec(16);
        let s = PhaseScreen::from_fn(g, |r, c| (r * 16 + c) as f64);
        let c = Center::new(3.0, 3.0);
        let (even, odd) = parity_decompose(&s, c).unwrap();
        // (10, 10) mirrors to (-4, -4): off grid.
        assert_eq!(even.get(10, 10), s.get(10, 10));
        assert_eq!(odd.get(10, 10), 0.0);
        assert!(matches!(
            parity_decompose(&s, Center::new(-1.0, 2.0)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            parity_decompose(&s, Center::new(2.0, 15.5)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn zernike_anchor_points() {
        let g = spec(64);
        let c = Center::new(30.0, 31.0);
        let z = zernike_screen(g, ZernikeKind::ComaX, 10.0, c, 6.0).unwrap();
        assert_eq!(z.get(31, 30), 0.0);
        assert!((z.get(31, 40) - 6.0).abs() < 1e-12);
        let y = zernike_screen(g, ZernikeKind::ComaY, 10.0, c, 6.0).unwrap();
        assert!((y.get(41, 30) - 6.0).abs() < 1e-12);
        assert_eq!(z.get(31, 41), 0.0);
        assert!(matches!(
            zernike_screen(g, ZernikeKind::ComaX, 0.0, c, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn zernike_has_no_even_part() {
        let g = spec(64);
        for &c in &[g.midpoint(), Center::new(30.0, 33.0), Center::new(28.5, 35.0)] {
            for kind in [ZernikeKind::ComaX, ZernikeKind::ComaY] {
                let z = zernike_screen(g, kind, 17.0, c, 6.0).unwrap();
                let (even, _) = parity_decompose(&z, c).unwrap();
                assert!(even.max_abs() < 1e-12, "{kind:?} at {c:?}: {}", even.max_abs());
            }
        }
    }

    #[test]
    fn expand_levels_and_blocks() {
        let g = spec(32);
        let mut genome = SlmGenome::for_grid(&g, 8, 16).unwrap();
        assert_eq!(expand_genome(&genome, g).unwrap().max_abs(), 0.0);
        genome.set_level(1, 2, 8);
        let s = expand_genome(&genome, g).unwrap();
        for r in 0..32 {
            for c in 0..32 {
                let expect = if (8..16).contains(&r) && (16..24).contains(&c) { PI } else { 0.0 };
                assert_eq!(s.get(r, c), expect);
            }
        }
        let wrong = GridSpec::new(40, 1.0).unwrap();
        assert!(matches!(expand_genome(&genome, wrong), Err(Error::Config(_))));
    }

    #[test]
    fn symmetric_genome_expands_even() {
        let g = spec(48);
        let c = g.midpoint();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut genome = SlmGenome::for_grid(&g, 8, 16).unwrap();
        genome.randomize(&mut rng);
        let sym = genome.symmetrize(c);
        assert_eq!(sym.symmetry(), Symmetry::Inversion(c));
        let s = expand_genome(&sym, g).unwrap();
        let (_, odd) = parity_decompose(&s, c).unwrap();
        assert_eq!(odd.max_abs(), 0.0);
    }
}
