//! Super-pixel genomes for the SLM and their inversion orbits.

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{round_half_down, Center, GridSpec, Layout};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Symmetry {
    None,
    /// 180-degree rotation symmetry about a point given in screen pixels.
    Inversion(Center),
}

/// Discrete phase levels on a `rows x cols` array of super-pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlmGenome {
    rows: usize,
    cols: usize,
    block: (usize, usize),
    num_levels: u8,
    levels: Vec<u8>,
    symmetry: Symmetry,
}

impl SlmGenome {
    /// All-zero genome with `block` = (rows, cols) screen pixels per super-pixel.
    pub fn new(rows: usize, cols: usize, block: (usize, usize), num_levels: u8) -> Result<Self> {
        if rows == 0 || cols == 0 || block.0 == 0 || block.1 == 0 {
            return Err(Error::config("genome and block dimensions must be positive"));
        }
        if num_levels < 2 {
            return Err(Error::config("a genome needs at least two phase levels"));
        }
        Ok(SlmGenome {
            rows,
            cols,
            block,
            num_levels,
            levels: vec![0; rows * cols],
            symmetry: Symmetry::None,
        })
    }

    /// Genome tiling `spec` with square super-pixels of side `superpixel`
    /// (a line grid uses `1 x superpixel` blocks).
    pub fn for_grid(spec: &GridSpec, superpixel: usize, num_levels: u8) -> Result<Self> {
        if superpixel == 0 || spec.cols() % superpixel != 0 {
            return Err(Error::config(format!(
                "super-pixel size {superpixel} does not divide grid size {}",
                spec.cols()
            )));
        }
        let block = match spec.layout() {
            Layout::Square => (superpixel, superpixel),
            Layout::Line => (1, superpixel),
        };
        Self::new(spec.rows() / block.0, spec.cols() / block.1, block, num_levels)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn block(&self) -> (usize, usize) {
        self.block
    }

    pub fn num_levels(&self) -> u8 {
        self.num_levels
    }

    pub fn levels(&self) -> &[u8] {
        &self.levels
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn level(&self, row: usize, col: usize) -> u8 {
        self.levels[row * self.cols + col]
    }

    /// Set one level. Clears any symmetry tag, since the invariant may no
    /// longer hold.
    pub fn set_level(&mut self, row: usize, col: usize, level: u8) {
        assert!(level < self.num_levels, "level {level} out of range");
        self.levels[row * self.cols + col] = level;
        self.symmetry = Symmetry::None;
    }

    pub fn from_levels(template: &SlmGenome, levels: Vec<u8>) -> Result<Self> {
        if levels.len() != template.len() {
            return Err(Error::config("level vector length does not match genome"));
        }
        if levels.iter().any(|&l| l >= template.num_levels) {
            return Err(Error::domain("genome level out of range"));
        }
        Ok(SlmGenome {
            levels,
            symmetry: Symmetry::None,
            ..template.clone()
        })
    }

    pub fn randomize<R: Rng>(&mut self, rng: &mut R) {
        for l in &mut self.levels {
            *l = rng.random_range(0..self.num_levels);
        }
        self.symmetry = Symmetry::None;
    }

    fn mirror_axis(i: usize, block: usize, len: usize, c: f64) -> Option<usize> {
        let half = (block as f64 - 1.0) / 2.0;
        let center = (i * block) as f64 + half;
        let m = round_half_down((2.0 * c - center - half) / block as f64);
        (m >= 0.0 && m < len as f64).then_some(m as usize)
    }

    /// Super-pixel containing the inversion image of super-pixel `idx`.
    pub fn mirror_super(&self, idx: usize, c: Center) -> Option<usize> {
        let (r, col) = (idx / self.cols, idx % self.cols);
        let mr = Self::mirror_axis(r, self.block.0, self.rows, c.cy)?;
        let mc = Self::mirror_axis(col, self.block.1, self.cols, c.cx)?;
        Some(mr * self.cols + mc)
    }

    /// Orbits of super-pixels under the genome's symmetry, each listed with
    /// its representative (lowest row-major index) first.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        match self.symmetry {
            Symmetry::None => (0..self.len()).map(|i| vec![i]).collect(),
            Symmetry::Inversion(c) => inversion_orbits(self, c),
        }
    }

    pub fn is_symmetric_about(&self, c: Center) -> bool {
        (0..self.len()).all(|i| match self.mirror_super(i, c) {
            Some(m) => self.levels[m] == self.levels[i],
            None => true,
        })
    }

    /// Copy each orbit representative's level onto the rest of its orbit.
    pub fn symmetrize(&self, c: Center) -> SlmGenome {
        let mut out = SlmGenome {
            symmetry: Symmetry::Inversion(c),
            ..self.clone()
        };
        for orbit in inversion_orbits(self, c) {
            let level = out.levels[orbit[0]];
            for &i in &orbit[1..] {
                out.levels[i] = level;
            }
        }
        out
    }

    /// Hex SHA-256 of the level array, shape and level count.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.rows as u64).to_le_bytes());
        h.update((self.cols as u64).to_le_bytes());
        h.update([self.num_levels]);
        h.update(&self.levels);
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn inversion_orbits(g: &SlmGenome, c: Center) -> Vec<Vec<usize>> {
    let mut seen = vec![false; g.len()];
    let mut out = Vec::new();
    for i in 0..g.len() {
        if seen[i] {
            continue;
        }
        seen[i] = true;
        let mut orbit = vec![i];
        if let Some(m) = g.mirror_super(i, c) {
            if !seen[m] {
                seen[m] = true;
                orbit.push(m);
            }
        }
        out.push(orbit);
    }
    out
}

/// Number of independent genes: one per orbit.
pub fn free_parameter_count(g: &SlmGenome) -> usize {
    g.orbits().len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn square(rows: usize, block: usize) -> SlmGenome {
        SlmGenome::new(rows, rows, (block, block), 16).unwrap()
    }

    fn midpoint(g: &SlmGenome) -> Center {
        let m = (g.cols() * g.block().1) as f64 / 2.0 - 0.5;
        Center::new(m, m)
    }

    #[test]
    fn free_parameters() {
        let g = square(10, 8);
        assert_eq!(free_parameter_count(&g), 100);
        let c = midpoint(&g);
        assert_eq!(free_parameter_count(&g.symmetrize(c)), 50);
    }

    #[test]
    fn three_by_three_orbits_by_enumeration() {
        let g = square(3, 8);
        let c = midpoint(&g);
        // Brute force: pair (r, c) with (2 - r, 2 - c).
        let mut pairs = std::collections::BTreeSet::new();
        for r in 0..3usize {
            for col in 0..3usize {
                let a = r * 3 + col;
                let b = (2 - r) * 3 + (2 - col);
                pairs.insert((a.min(b), a.max(b)));
            }
        }
        assert_eq!(pairs.len(), 5);
        assert_eq!(free_parameter_count(&g.symmetrize(c)), pairs.len());
    }

    #[test]
    fn zero_genome_stays_zero() {
        let g = square(6, 8);
        let s = g.symmetrize(midpoint(&g));
        assert!(s.levels().iter().all(|&l| l == 0));
    }

    #[test]
    fn mirror_is_an_involution_for_shifted_centers() {
        let g = square(12, 8);
        for shift in [0.0, 5.0, 10.0, 20.0, 3.25] {
            let c = midpoint(&g).offset(shift, 0.0);
            for i in 0..g.len() {
                if let Some(m) = g.mirror_super(i, c) {
                    assert_eq!(g.mirror_super(m, c), Some(i), "shift {shift} idx {i}");
                }
            }
        }
    }

    #[test]
    fn line_genome_mirrors_columns_only() {
        let spec = GridSpec::line(64, 1.0).unwrap();
        let g = SlmGenome::for_grid(&spec, 8, 16).unwrap();
        assert_eq!((g.rows(), g.cols(), g.block()), (1, 8, (1, 8)));
        let c = spec.midpoint();
        assert_eq!(g.mirror_super(0, c), Some(7));
        assert_eq!(free_parameter_count(&g.symmetrize(c)), 4);
    }

    proptest! {
        #[test]
        fn symmetrize_is_idempotent(seed in any::<u64>(), rows in 2usize..13, shift in 0.0f64..24.0) {
            let mut g = square(rows, 8);
            g.randomize(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let c = midpoint(&g).offset(shift, -shift / 2.0);
            let once = g.symmetrize(c);
            prop_assert!(once.is_symmetric_about(c));
            let twice = once.symmetrize(c);
            prop_assert_eq!(&once, &twice);
            // Singletons are self-mirrored super-pixels or ones whose mirror is off the genome.
            let singles = (0..g.len()).filter(|&i| g.mirror_super(i, c).is_none_or(|m| m == i)).count();
            prop_assert!(free_parameter_count(&once) <= (rows * rows).div_ceil(2) + singles);
            let mid = midpoint(&g);
            let self_mirrored = (0..g.len()).filter(|&i| g.mirror_super(i, mid) == Some(i)).count();
            prop_assert!(free_parameter_count(&g.symmetrize(mid)) <= (rows * rows).div_ceil(2) + self_mirrored);
        }
    }
}
